#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace cpl {

enum class ErrorKind {
  not_found,  // missing file or directory
  parse,      // malformed on-disk data
  validity,   // input violates a documented invariant
  io,         // filesystem write/read failure
  config,     // bad configuration value
  numeric,    // numeric domain error (zero norm, empty mean, ...)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string msg)
      : std::runtime_error(std::move(msg)), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace cpl
