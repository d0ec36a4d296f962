#pragma once

#include <stdexcept>
#include <string>

namespace boundline {

enum class ErrorKind {
  Io,
  Format,
  Parameter,
  Dimension,
  Topology,
  State,
  Lookup,
  NoPath,
  Domain,
  Convergence,
  Internal,
};

/// Library-wide exception. The kind drives CLI exit codes and HTTP statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

// Process exit code: 2 I/O, 3 parameters, 4 internal.
int exit_code(ErrorKind kind) noexcept;

}  // namespace boundline
