#pragma once

#include <stdexcept>
#include <string>

namespace inret {

// Tensor or matrix dimensions do not agree.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A coordinate lies outside the domain {|x|_inf <= 1}.
struct DomainError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Caller violated an operation's precondition (e.g. non-scalar backward seed).
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Object used in a state that does not allow the operation (e.g. consumed tape).
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Binary/text file does not match its declared layout.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : FormatError {
  ParseError(const std::string& source, int line, const std::string& what)
      : FormatError(source + ":" + std::to_string(line) + ": " + what), line(line) {}
  int line;
};

// NaN/Inf encountered during optimization.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Retrieval has no candidate left (empty store or everything excluded).
struct EmptyStoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Classifier predicted a category with no candidates.
struct ClassificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Implicit-function or architecture tag does not match what the operation requires.
struct TagError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace inret
