#include "stackreg/error.hpp"

namespace stackreg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::missing_file: return "missing_file";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::invalid_manifest: return "invalid_manifest";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::non_finite_pixel: return "non_finite_pixel";
    case ErrorCode::too_few_frames: return "too_few_frames";
    case ErrorCode::invalid_metadata: return "invalid_metadata";
    case ErrorCode::degenerate_input: return "degenerate_input";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::shape_mismatch: return "shape_mismatch";
    case ErrorCode::numerical_failure: return "numerical_failure";
    case ErrorCode::detection_failed: return "detection_failed";
    case ErrorCode::shift_out_of_range: return "shift_out_of_range";
    case ErrorCode::drift_exceeds_margin: return "drift_exceeds_margin";
    case ErrorCode::unrepairable_element: return "unrepairable_element";
    case ErrorCode::registration_failed: return "registration_failed";
    case ErrorCode::invalid_params: return "invalid_params";
  }
  return "unknown";
}

}  // namespace stackreg
