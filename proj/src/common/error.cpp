#include "minimano/common/error.hpp"

namespace minimano {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::syntax: return "syntax";
    case ErrorKind::validation: return "validation";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::type_mismatch: return "type-mismatch";
    case ErrorKind::missing_parameter: return "missing-parameter";
    case ErrorKind::unknown_parameter: return "unknown-parameter";
    case ErrorKind::duplicate: return "duplicate-name";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::unauthorized: return "unauthorized";
    case ErrorKind::forbidden: return "authorization-denied";
    case ErrorKind::no_capacity: return "no-capacity";
    case ErrorKind::invalid_state: return "invalid-state";
    case ErrorKind::dependency_cycle: return "dependency-cycle";
    case ErrorKind::unavailable: return "attribute-not-yet-available";
    case ErrorKind::unknown_attribute: return "unknown-attribute";
    case ErrorKind::deployment_failed: return "deployment-failed";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace minimano
