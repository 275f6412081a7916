#pragma once

#include "stackreg/grid.hpp"
#include "stackreg/shift_matrix.hpp"
#include "stackreg/stack_io.hpp"

#include <vector>

namespace stackreg {

struct ShiftedFrame {
  Image image;
  /// Zero where circularly wrapped content entered the frame.
  Mask valid;
};

/// Translates the frame content by `shift` (out(x) = in(x - shift)) with the
/// Fourier shift theorem. The wrapped margin of ceil(|shift|) pixels on the
/// side the content moved away from is marked invalid. Throws
/// shift_out_of_range when |shift| >= min(H, W) / 4.
ShiftedFrame shift_frame(const Image& frame, Vec2 shift);

struct AverageImage {
  Image mean;
  /// Number of frames contributing to each pixel.
  Grid<int> count;
  /// Nonzero where count > 0.
  Mask valid;
};

/// Shifts every included frame by -r_i and averages per pixel over the
/// frames whose validity covers it.
AverageImage average_stack(const ImageStack& stack, const ShiftSolution& solution, int threads = 0);

/// Separable Gaussian blur, kernel truncated at 4 sigma, mirrored borders
/// (d c b a | a b c d).
Image gaussian_smooth(const Image& image, double sigma);

/// std(signal) / std(noise) where signal = image blurred with sigma = 2 px and
/// noise = image - signal. Restricted to `valid` pixels when given.
double estimate_snr(const Image& image, const Mask* valid = nullptr);

/// log(1 + |FFT|) with the zero frequency at (H/2, W/2).
Image power_spectrum(const Image& image);

/// Median of a centered spectrum over angle in unit-width radial bins;
/// element r covers radii [r - 0.5, r + 0.5) in pixels of the spectrum grid.
std::vector<double> azimuthal_median_profile(const Image& spectrum);

/// Median of a centered spectrum over the annulus k_lo <= |k| < k_hi
/// (cycles/px) restricted to directions within `half_angle` radians of
/// +/- `direction`.
double wedge_median(const Image& spectrum, Vec2 direction, double half_angle, double k_lo,
                    double k_hi);

}  // namespace stackreg
