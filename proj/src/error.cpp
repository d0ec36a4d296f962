#include "boundline/error.hpp"

namespace boundline {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Topology: return "topology";
    case ErrorKind::State: return "state";
    case ErrorKind::Lookup: return "lookup";
    case ErrorKind::NoPath: return "no_path";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::Internal: return "internal";
  }
  return "internal";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::Format:
      return 2;
    case ErrorKind::Parameter:
    case ErrorKind::Domain:
    case ErrorKind::Dimension:
      return 3;
    default:
      return 4;
  }
}

}  // namespace boundline
