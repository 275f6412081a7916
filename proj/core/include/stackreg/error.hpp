#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stackreg {

enum class ErrorCode {
  missing_file,
  io_error,
  invalid_manifest,
  dimension_mismatch,
  non_finite_pixel,
  too_few_frames,
  invalid_metadata,
  degenerate_input,
  invalid_argument,
  shape_mismatch,
  numerical_failure,
  detection_failed,
  shift_out_of_range,
  drift_exceeds_margin,
  unrepairable_element,
  registration_failed,
  invalid_params,
};

/// Stable identifier used in machine-readable error records.
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stackreg
