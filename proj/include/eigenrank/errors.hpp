#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eigenrank {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  not_psd,
  no_convergence,
  pool_too_small,
  infeasible,
  backend_error,
  spawn_failure,
  nonzero_exit,
  malformed_output,
  bad_magic,
  bad_header,
  truncated,
  bad_pixel,
  trailing_bytes,
  io_error,
  manifest_error,
};

std::string_view to_string(ErrorCode code);

// Every failure carries a stable machine-readable code; the CLI prints it as
// the prefix of its one-line error message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace eigenrank
