#pragma once

#include <stdexcept>
#include <string>

namespace twostage {

/// Broad failure classes. The C API and the CLI exit codes are derived from these.
enum class ErrorKind {
  precondition,  // caller violated a documented precondition
  domain,        // argument outside the mathematical domain
  data,          // malformed or invalid input data
  io,            // filesystem failure
  numerical,     // quadrature / solver / discretization failure
  fit_failure,   // optimizer could not produce a usable estimate
  runaway,       // simulation exceeded its event cap
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace twostage
