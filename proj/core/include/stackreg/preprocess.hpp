#pragma once

#include "stackreg/grid.hpp"

#include <string>
#include <string_view>

namespace stackreg {

/// Real-space boundary handling applied before the FFT.
enum class WindowKind { hann, mirror_pad, periodic_smooth };

std::string_view to_string(WindowKind kind);
WindowKind parse_window_kind(std::string_view name);

/// Zero mean, unit sample standard deviation (n-1 denominator).
/// Throws degenerate_input for constant frames.
Image normalize_frame(const Image& frame);

/// Separable product of symmetric 1D Hann tapers; zero on the border.
Image hann_window(int height, int width);

/// Reflect-pads an HxW frame to 2Hx2W so the result is continuous under wrap-around.
Image mirror_pad(const Image& frame);

struct PeriodicSmoothParts {
  Image periodic;
  Image smooth;
};

/// Splits a frame into a periodic component and a smooth component that
/// carries the wrap-around boundary discontinuity. periodic + smooth == frame.
PeriodicSmoothParts periodic_smooth_decomposition(const Image& frame);

Image apply_window(const Image& frame, WindowKind kind);

/// normalize_frame followed by apply_window.
Image preprocess_frame(const Image& frame, WindowKind kind);

}  // namespace stackreg
