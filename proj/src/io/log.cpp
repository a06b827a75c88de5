#include "inret/log.hpp"

#include <iostream>

namespace inret {

namespace {
WarningHandler& handler() {
  static WarningHandler h = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
  return h;
}
}  // namespace

void set_warning_handler(WarningHandler h) {
  handler() = h ? std::move(h) : [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
}

void warn(const std::string& message) { handler()(message); }

}  // namespace inret
