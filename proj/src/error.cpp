#include "lexloop/error.hpp"

namespace lexloop {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation: return "validation";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::unsupported_scale: return "unsupported_scale";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::exhausted: return "exhausted";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace lexloop
