#pragma once

#include "stackreg/grid.hpp"
#include "stackreg/spectral.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace stackreg {

/// Relative shift of one frame with respect to another, in pixels.
struct Shift2D {
  double x = 0.0;
  double y = 0.0;
  /// Fitted peak value (A + c) or raw surface value.
  double score = 0.0;
  /// False when the value comes from the pixel argmax (by request or as a fit fallback).
  bool refined = false;

  Vec2 vec() const { return {x, y}; }
};

struct PixelCoord {
  int row = 0;
  int col = 0;
  bool operator==(const PixelCoord&) const = default;
};

/// Interior pixels that dominate their 8-neighbourhood, brightest first,
/// at most k (1 <= k <= 10). A pixel must be strictly greater than the
/// neighbours preceding it in raster order and not less than the others,
/// so a plateau of equal maxima yields its first pixel.
std::vector<PixelCoord> find_local_maxima(const CorrelationSurface& surface, int k);

/// A(exp(-((x-cx)^2/2sx^2 + (y-cy)^2/2sy^2))) + c, center in surface pixel coordinates.
struct GaussianFit {
  double amplitude = 0.0;
  double center_col = 0.0;
  double center_row = 0.0;
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  double offset = 0.0;
  int iterations = 0;

  double peak() const { return amplitude + offset; }
};

/// Levenberg-Marquardt fit over a (2*half+1)^2 window centred on (row, col).
/// Returns nullopt when the fit diverges (center leaves the window, a sigma
/// becomes non-positive, or the residual is non-finite).
std::optional<GaussianFit> fit_gaussian(const Image& values, int row, int col, int half = 3);

/// Fits each candidate and returns the centre of the fit with the largest
/// A + c. Falls back to argmax_shift (refined == false) if every fit fails.
Shift2D fit_subpixel(const CorrelationSurface& surface, std::span<const PixelCoord> candidates);

/// Integer shift at the global maximum; ties prefer the smallest |shift|,
/// then the smallest (y, x).
Shift2D argmax_shift(const CorrelationSurface& surface);

enum class PeakMode { argmax, gaussian_fit };

std::string_view to_string(PeakMode mode);
PeakMode parse_peak_mode(std::string_view name);

/// Peak location per mode; gaussian_fit uses the top `candidates` local maxima.
Shift2D locate_peak(const CorrelationSurface& surface, PeakMode mode, int candidates);

}  // namespace stackreg
