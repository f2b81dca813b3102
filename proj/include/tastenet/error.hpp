#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tastenet {

enum class ErrorKind {
  argument,
  schema,
  parse,
  data,
  spec,
  training,
  regression,
  indicator,
  probe,
  config,
  io,
  internal,
};

std::string_view error_kind_name(ErrorKind kind);

/// Single exception type for the library; `kind()` classifies the failure so
/// the CLI can map it to a machine-readable error document.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace tastenet
