#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lexloop {

enum class ErrorCode {
  validation,
  infeasible,
  unsupported_scale,
  not_found,
  conflict,
  exhausted,
  io,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace lexloop
