#pragma once

#include "stackreg/reconstruct.hpp"
#include "stackreg/shift_matrix.hpp"
#include "stackreg/stack_io.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace stackreg {

struct RegistrationConfig {
  CorrelationSettings correlation;
  /// Weights for MaskKind::custom (FFT layout, windowed frame shape).
  std::optional<Image> custom_weights;
  OutlierMethod outlier_method = OutlierMethod::transitivity;
  /// px
  double outlier_threshold = 2.0;
  int max_paths = 5;
  int polynomial_order = 3;
  double row_outlier_fraction = 0.5;
};

struct RegistrationResult {
  FourierMask mask;
  ShiftMatrix measured;
  /// Validity after outlier detection (excluded rows/columns cleared).
  Mask validity;
  std::vector<int> excluded;
  ShiftMatrix repaired;
  ShiftSolution solution;
  /// Present when at least 3 frames are included.
  std::optional<DriftProfile> drift;
  AverageImage average;
  std::vector<double> frame_snr;
  double frame_snr_median = 0.0;
  /// Estimated over pixels covered by every included frame.
  double average_snr = 0.0;
  /// Wall-clock seconds per stage, in execution order.
  std::vector<std::pair<std::string, double>> timing;
};

/// correlate -> detect -> exclude -> re-detect -> repair -> solve -> average.
RegistrationResult register_stack(const ImageStack& stack, const RegistrationConfig& config);

/// Outlier elements (i < j) flagged by detection among included frames.
std::vector<std::pair<int, int>> flagged_elements(const RegistrationResult& result);

struct CompareMetrics {
  double rms = 0.0;
  double max = 0.0;
  int jumps = 0;
  std::vector<int> jump_frames;
  /// Frames compared (excluded in either input are skipped).
  int compared = 0;
  std::vector<int> excluded_a;
  std::vector<int> excluded_b;
  bool excluded_agree = true;
};

/// Position errors after removing the mean offset over compared frames. A
/// jump is an error larger than `jump_threshold` (half the shortest lattice
/// vector). Symmetric in its two inputs.
CompareMetrics compare_positions(std::span<const Vec2> a, std::span<const Vec2> b, double jump_threshold,
                                 std::span<const int> excluded_a = {}, std::span<const int> excluded_b = {});

}  // namespace stackreg
