#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace topo {

enum class ErrorKind {
  invalid_parameter,
  invalid_input,
  shape,
  ill_posed,
  solver_failure,
  numeric_failure,
  sampling_failure,
  format,
  io,
  training,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Same kind, message prefixed with context (e.g. "iteration 12").
  Error with_context(std::string_view context) const {
    return Error(kind_, std::string(context) + ": " + what());
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace topo
