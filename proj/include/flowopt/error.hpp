#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flowopt {

enum class ErrorKind {
  invalid_input,
  insufficient_data,
  numerical_failure,
  excluded_data,
  parse_error,
  conflict,
  not_found,
  campaign_complete,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` drives CLI exit codes and
/// HTTP status mapping.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace flowopt
