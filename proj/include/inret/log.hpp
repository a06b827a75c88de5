#pragma once

#include <functional>
#include <string>

namespace inret {

using WarningHandler = std::function<void(const std::string&)>;

/// Routes library warnings; the default handler prints to stderr.
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace inret
