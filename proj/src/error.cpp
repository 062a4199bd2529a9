#include "pgbn/error.hpp"

namespace pgbn {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid_parameter";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::degenerate_weights: return "degenerate_weights";
    case ErrorKind::parse: return "parse";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::model: return "model";
    case ErrorKind::serialization: return "serialization";
    case ErrorKind::invariant_violation: return "invariant_violation";
    case ErrorKind::numeric_domain: return "numeric_domain";
    case ErrorKind::structure: return "structure";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace pgbn
