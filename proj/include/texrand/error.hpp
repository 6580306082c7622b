#pragma once

#include <stdexcept>
#include <string>

namespace texrand {

enum class ErrorKind {
  invalid_parameter,
  invalid_shape,
  degenerate,
  domain,
  insufficient_pool,
  format,
  io,
  numerical,
};

// Every failure raised by the library carries a kind so that front ends can
// map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::invalid_shape: return "invalid-shape";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::domain: return "domain";
    case ErrorKind::insufficient_pool: return "insufficient-pool";
    case ErrorKind::format: return "format";
    case ErrorKind::io: return "io";
    case ErrorKind::numerical: return "numerical";
  }
  return "unknown";
}

// Exit status contract of the command-line front end.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 2;
inline constexpr int io = 3;
inline constexpr int validation = 4;
inline constexpr int numerical = 5;
}  // namespace exit_code

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io:
    case ErrorKind::format: return exit_code::io;
    case ErrorKind::numerical: return exit_code::numerical;
    default: return exit_code::validation;
  }
}

namespace detail {

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace detail
}  // namespace texrand
