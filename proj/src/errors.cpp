#include "eigenrank/errors.hpp"

namespace eigenrank {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::not_psd: return "not_psd";
    case ErrorCode::no_convergence: return "no_convergence";
    case ErrorCode::pool_too_small: return "pool_too_small";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::backend_error: return "backend_error";
    case ErrorCode::spawn_failure: return "spawn_failure";
    case ErrorCode::nonzero_exit: return "nonzero_exit";
    case ErrorCode::malformed_output: return "malformed_output";
    case ErrorCode::bad_magic: return "bad_magic";
    case ErrorCode::bad_header: return "bad_header";
    case ErrorCode::truncated: return "truncated";
    case ErrorCode::bad_pixel: return "bad_pixel";
    case ErrorCode::trailing_bytes: return "trailing_bytes";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::manifest_error: return "manifest_error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

}  // namespace eigenrank
