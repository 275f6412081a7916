#pragma once

#include "stackreg/grid.hpp"
#include "stackreg/paths.hpp"
#include "stackreg/peaks.hpp"
#include "stackreg/preprocess.hpp"
#include "stackreg/spectral.hpp"
#include "stackreg/stack_io.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stackreg {

/// All-pairs relative shifts R_ij = X_ij x + Y_ij y. Entries with i < j are
/// measured from the pair (i, j); j < i entries are their negatives.
class ShiftMatrix {
 public:
  ShiftMatrix() = default;
  explicit ShiftMatrix(int frame_count);

  /// Ideal matrix R_ij = p_j - p_i.
  static ShiftMatrix from_positions(std::span<const Vec2> positions);

  int size() const { return n_; }

  Vec2 at(int i, int j) const { return {x_(i, j), y_(i, j)}; }
  /// Sets R_ij and R_ji = -R_ij.
  void set(int i, int j, Vec2 value);

  bool valid(int i, int j) const { return valid_(i, j) != 0; }
  /// Sets the validity of (i, j) and (j, i).
  void set_valid(int i, int j, bool is_valid);

  const Image& x() const { return x_; }
  const Image& y() const { return y_; }
  const Mask& validity() const { return valid_; }
  void set_validity(const Mask& mask);

  /// Per-element peak score and whether the peak came from a Gaussian fit.
  double score(int i, int j) const { return score_(i, j); }
  bool refined(int i, int j) const { return refined_(i, j) != 0; }
  void set_peak_info(int i, int j, double score, bool refined);
  const Image& scores() const { return score_; }
  const Mask& refined_mask() const { return refined_; }

 private:
  int n_ = 0;
  Image x_;
  Image y_;
  Mask valid_;
  Image score_;
  Mask refined_;
};

struct MaskSpec {
  MaskKind kind = MaskKind::none;
  MaskParams params;
  /// Detect the reciprocal basis from the stack (anisotropic-gaussian only).
  bool auto_basis = true;
  std::vector<Vec2> basis;
};

struct CorrelationSettings {
  WindowKind window = WindowKind::hann;
  CorrelationMethod method = CorrelationMethod::cross;
  MaskSpec mask;
  PeakMode peak_mode = PeakMode::gaussian_fit;
  int candidates = 5;
  /// Worker threads for pair correlations; <= 0 uses all cores.
  int threads = 0;
};

/// Mask actually used for a stack (basis resolved, shape matching the
/// windowed frames).
FourierMask resolve_mask(const ImageStack& stack, const CorrelationSettings& settings);

/// Correlates all N(N-1)/2 pairs. Failed pairs are marked invalid rather
/// than aborting. `mask` overrides resolve_mask when given.
ShiftMatrix compute_shift_matrix(const ImageStack& stack, const CorrelationSettings& settings,
                                 const FourierMask* mask = nullptr);

/// Mean over paths of |R_ik - sum of hops|. Paths containing invalid
/// elements are skipped; nullopt when none remain.
std::optional<double> transitivity_error(const ShiftMatrix& matrix, int i, int k,
                                         std::span<const Path> paths);

/// Sum of the hops along a path.
Vec2 path_sum(const ShiftMatrix& matrix, const Path& path);

enum class OutlierMethod { transitivity, neighbor, background_fit };

std::string_view to_string(OutlierMethod method);
OutlierMethod parse_outlier_method(std::string_view name);

struct OutlierOptions {
  int max_paths = 5;
  int polynomial_order = 3;
  /// Frames whose rows and columns are ignored (reported invalid).
  std::vector<int> excluded;
};

/// Symmetric validity mask after outlier detection.
///
/// transitivity: each element is scored with transitivity_error over its
/// preferred all-valid paths. Among elements above threshold, the one that
/// appears in the most failing path equations (as the element or as a hop)
/// is invalidated and the scores depending on it are refreshed, repeating
/// until no score exceeds the threshold. Invalidated measurements whose
/// score over all-valid paths then falls back under the threshold are
/// readmitted, and the two passes alternate until the mask is stable.
/// This runs twice: from the measured mask, and from a screen that drops
/// elements far from the median of their two-hop relations R_ij + R_jk.
/// The result with fewer invalid elements is returned.
/// neighbor: distance from the component-wise median of valid 8-neighbours.
/// background-fit: residual from a 2D polynomial fit of X and Y over (i, j).
Mask detect_outliers(const ShiftMatrix& matrix, OutlierMethod method, double threshold,
                     const OutlierOptions& options = {});

/// Frames with more than `row_outlier_fraction` of their off-diagonal row
/// invalid. Throws registration_failed if every frame would be excluded.
std::vector<int> exclude_bad_frames(const Mask& validity, double row_outlier_fraction = 0.5);

/// Replaces each invalid element among included frames with the median
/// (per component) of up to max_paths all-valid path sums. Elements with
/// the most available paths are repaired first and then reused. Throws
/// unrepairable_element listing the elements with no usable path.
ShiftMatrix repair_outliers(const ShiftMatrix& matrix, const Mask& validity, int max_paths = 5,
                            std::span<const int> excluded = {});

struct ShiftSolution {
  /// Stage position r_i per frame (px); zero for excluded frames.
  std::vector<Vec2> shifts;
  std::vector<int> excluded;

  bool included(int frame) const;
};

/// Least-squares positions from the relative shifts of included frames:
/// r_i = -(1/N') sum_j R_ij (equivalently the mean of column i), so that
/// R_ij ~ r_j - r_i and the included positions have zero mean.
ShiftSolution optimal_shifts(const ShiftMatrix& matrix, std::span<const int> excluded = {});

struct DriftProfile {
  std::vector<int> frames;
  std::vector<double> times;
  std::vector<Vec2> positions;
  std::vector<Vec2> smoothed;
  std::vector<Vec2> velocities;
  /// "angstrom" when the pixel size is known, else "px".
  std::string unit;
};

/// Stage trajectory of included frames: positions smoothed with a
/// Gaussian (sigma = 1 frame), velocities by central differences
/// (one-sided at the ends). Needs at least 3 included frames.
DriftProfile drift_profile(const ShiftSolution& solution, const StackMetadata& metadata);

}  // namespace stackreg
