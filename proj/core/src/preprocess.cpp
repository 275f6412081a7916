#include "stackreg/preprocess.hpp"

#include "stackreg/error.hpp"
#include "stackreg/fft.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace stackreg {

std::string_view to_string(WindowKind kind) {
  switch (kind) {
    case WindowKind::hann: return "hann";
    case WindowKind::mirror_pad: return "mirror-pad";
    case WindowKind::periodic_smooth: return "periodic-smooth";
  }
  return "hann";
}

WindowKind parse_window_kind(std::string_view name) {
  if (name == "hann") return WindowKind::hann;
  if (name == "mirror-pad") return WindowKind::mirror_pad;
  if (name == "periodic-smooth") return WindowKind::periodic_smooth;
  throw Error(ErrorCode::invalid_argument, "unknown window kind '" + std::string(name) + "'");
}

Image normalize_frame(const Image& frame) {
  const auto values = frame.values();
  const auto n = static_cast<double>(values.size());
  if (values.size() < 2) throw Error(ErrorCode::degenerate_input, "frame has fewer than 2 pixels");

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0) || !std::isfinite(sd)) {
    throw Error(ErrorCode::degenerate_input, "cannot normalize a constant frame");
  }

  Image out(frame.height(), frame.width());
  auto dst = out.values();
  for (std::size_t i = 0; i < values.size(); ++i) dst[i] = (values[i] - mean) / sd;
  return out;
}

namespace {

std::vector<double> hann_1d(int n) {
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  if (n < 2) return w;
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] =
        0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / static_cast<double>(n - 1)));
  }
  return w;
}

}  // namespace

Image hann_window(int height, int width) {
  const auto wy = hann_1d(height);
  const auto wx = hann_1d(width);
  Image out(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      out(y, x) = wy[static_cast<std::size_t>(y)] * wx[static_cast<std::size_t>(x)];
    }
  }
  return out;
}

Image mirror_pad(const Image& frame) {
  const int h = frame.height();
  const int w = frame.width();
  Image out(2 * h, 2 * w);
  for (int y = 0; y < 2 * h; ++y) {
    const int sy = y < h ? y : 2 * h - 1 - y;
    for (int x = 0; x < 2 * w; ++x) {
      const int sx = x < w ? x : 2 * w - 1 - x;
      out(y, x) = frame(sy, sx);
    }
  }
  return out;
}

PeriodicSmoothParts periodic_smooth_decomposition(const Image& frame) {
  const int h = frame.height();
  const int w = frame.width();

  // Boundary image: jump across the wrap-around edges.
  Image boundary(h, w, 0.0);
  for (int x = 0; x < w; ++x) {
    const double jump = frame(h - 1, x) - frame(0, x);
    boundary(0, x) += jump;
    boundary(h - 1, x) -= jump;
  }
  for (int y = 0; y < h; ++y) {
    const double jump = frame(y, w - 1) - frame(y, 0);
    boundary(y, 0) += jump;
    boundary(y, w - 1) -= jump;
  }

  ComplexImage spectrum = fft::forward(boundary);
  for (int q = 0; q < h; ++q) {
    const double cy = 2.0 * std::cos(2.0 * std::numbers::pi * q / h);
    for (int r = 0; r < w; ++r) {
      const double denom = cy + 2.0 * std::cos(2.0 * std::numbers::pi * r / w) - 4.0;
      spectrum(q, r) = (q == 0 && r == 0) ? 0.0 : spectrum(q, r) / denom;
    }
  }

  PeriodicSmoothParts parts;
  parts.smooth = fft::inverse_real(spectrum);
  parts.periodic = Image(h, w);
  auto src = frame.values();
  auto s = parts.smooth.values();
  auto p = parts.periodic.values();
  for (std::size_t i = 0; i < src.size(); ++i) p[i] = src[i] - s[i];
  return parts;
}

Image apply_window(const Image& frame, WindowKind kind) {
  switch (kind) {
    case WindowKind::hann: {
      const Image window = hann_window(frame.height(), frame.width());
      Image out(frame.height(), frame.width());
      auto src = frame.values();
      auto win = window.values();
      auto dst = out.values();
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * win[i];
      return out;
    }
    case WindowKind::mirror_pad:
      return mirror_pad(frame);
    case WindowKind::periodic_smooth:
      return periodic_smooth_decomposition(frame).periodic;
  }
  return frame;
}

Image preprocess_frame(const Image& frame, WindowKind kind) {
  return apply_window(normalize_frame(frame), kind);
}

}  // namespace stackreg
