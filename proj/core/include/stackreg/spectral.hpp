#pragma once

#include "stackreg/grid.hpp"
#include "stackreg/stack_io.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace stackreg {

enum class MaskKind { none, lowpass, bandpass, anisotropic_gaussian, custom };
enum class CorrelationMethod { cross, mutual, phase };

std::string_view to_string(MaskKind kind);
MaskKind parse_mask_kind(std::string_view name);
std::string_view to_string(CorrelationMethod method);
CorrelationMethod parse_correlation_method(std::string_view name);

struct MaskParams {
  /// Gaussian roll-off standard deviation for lowpass/bandpass, cycles/px.
  double k_max = 0.25;
  /// Inner cutoff for bandpass, cycles/px.
  double k_min = 0.0;
  /// Anisotropic mask: weight reaches exp(-1/2) at axis_scale * b_i.
  double axis_scale = 1.0;
};

/// Frequency-space weights w(k) in FFT layout (zero frequency at (0, 0)).
struct FourierMask {
  MaskKind kind = MaskKind::none;
  MaskParams params;
  std::vector<Vec2> basis;
  Image weights;
};

/// lowpass: exp(-|k|^2 / 2 k_max^2).
/// bandpass: lowpass(k_max) - lowpass(k_min), clipped to [0, 1].
/// anisotropic-gaussian: with k = a1 b1 + a2 b2 in reciprocal-lattice
/// coordinates, exp(-(a1^2 + a2^2) / 2 axis_scale^2); for orthogonal bases
/// this is a Gaussian with principal axes along b_i and sigma_i =
/// axis_scale |b_i|. A single basis vector is completed by its
/// perpendicular of equal length.
FourierMask build_mask(MaskKind kind, const MaskParams& params, int height, int width,
                       std::span<const Vec2> reciprocal_basis = {});

/// Wraps user weights (FFT layout). Validates range and k -> -k symmetry.
FourierMask custom_mask(Image weights);

/// Up to two reciprocal lattice vectors (cycles/px), half-plane reduced
/// (y > 0, or y == 0 and x > 0), from the frame-averaged power spectrum.
/// Throws detection_failed when no peak clears the noise floor.
std::vector<Vec2> detect_reciprocal_basis(std::span<const Image> frames);
std::vector<Vec2> detect_reciprocal_basis(const ImageStack& stack);

/// Correlation map with zero relative shift at (height/2, width/2).
struct CorrelationSurface {
  Image values;

  int center_row() const { return values.height() / 2; }
  int center_col() const { return values.width() / 2; }
  /// Relative shift (of b with respect to a) represented by an element.
  Vec2 shift_at(double row, double col) const {
    return {col - center_col(), row - center_row()};
  }
};

/// Correlation of two equally-sized frames. cross: F^-1(w conj(Fa) Fb);
/// mutual divides the spectrum by sqrt(|Fa||Fb| + eps); phase by
/// (|Fa||Fb| + eps), eps = 1e-10 * max(|Fa||Fb|). The argmax is the shift
/// of b relative to a.
CorrelationSurface correlate(const Image& a, const Image& b, CorrelationMethod method,
                             const FourierMask& mask);
CorrelationSurface correlate(const Image& a, const Image& b,
                             CorrelationMethod method = CorrelationMethod::cross);

/// Same as correlate() but starting from precomputed forward transforms.
/// `mask` may be null.
CorrelationSurface correlate_spectra(const ComplexImage& fa, const ComplexImage& fb,
                                     CorrelationMethod method, const FourierMask* mask);

}  // namespace stackreg
