#include "stackreg/spectral.hpp"

#include "stackreg/error.hpp"
#include "stackreg/fft.hpp"
#include "stackreg/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace stackreg {

std::string_view to_string(MaskKind kind) {
  switch (kind) {
    case MaskKind::none: return "none";
    case MaskKind::lowpass: return "lowpass";
    case MaskKind::bandpass: return "bandpass";
    case MaskKind::anisotropic_gaussian: return "anisotropic-gaussian";
    case MaskKind::custom: return "custom";
  }
  return "none";
}

MaskKind parse_mask_kind(std::string_view name) {
  if (name == "none") return MaskKind::none;
  if (name == "lowpass") return MaskKind::lowpass;
  if (name == "bandpass") return MaskKind::bandpass;
  if (name == "anisotropic-gaussian") return MaskKind::anisotropic_gaussian;
  if (name == "custom") return MaskKind::custom;
  throw Error(ErrorCode::invalid_argument, "unknown mask kind '" + std::string(name) + "'");
}

std::string_view to_string(CorrelationMethod method) {
  switch (method) {
    case CorrelationMethod::cross: return "cross";
    case CorrelationMethod::mutual: return "mutual";
    case CorrelationMethod::phase: return "phase";
  }
  return "cross";
}

CorrelationMethod parse_correlation_method(std::string_view name) {
  if (name == "cross") return CorrelationMethod::cross;
  if (name == "mutual") return CorrelationMethod::mutual;
  if (name == "phase") return CorrelationMethod::phase;
  throw Error(ErrorCode::invalid_argument, "unknown correlation method '" + std::string(name) + "'");
}

namespace {

void check_cutoff(double k, const char* name) {
  if (!(k > 0.0 && k <= 0.5)) {
    std::ostringstream msg;
    msg << name << " must lie in (0, 0.5] cycles/px, got " << k;
    throw Error(ErrorCode::invalid_argument, msg.str());
  }
}

double gaussian_rolloff(double k2, double sigma) {
  return std::exp(-0.5 * k2 / (sigma * sigma));
}

}  // namespace

FourierMask build_mask(MaskKind kind, const MaskParams& params, int height, int width,
                       std::span<const Vec2> reciprocal_basis) {
  if (height <= 0 || width <= 0) throw Error(ErrorCode::invalid_argument, "mask shape must be positive");

  FourierMask mask;
  mask.kind = kind;
  mask.params = params;
  mask.weights = Image(height, width, 1.0);

  switch (kind) {
    case MaskKind::none:
      return mask;
    case MaskKind::custom:
      throw Error(ErrorCode::invalid_argument, "custom masks are built with custom_mask()");
    case MaskKind::lowpass:
      check_cutoff(params.k_max, "k_max");
      break;
    case MaskKind::bandpass:
      check_cutoff(params.k_max, "k_max");
      check_cutoff(params.k_min, "k_min");
      if (!(params.k_min < params.k_max)) {
        throw Error(ErrorCode::invalid_argument, "bandpass requires k_min < k_max");
      }
      break;
    case MaskKind::anisotropic_gaussian:
      if (reciprocal_basis.empty()) {
        throw Error(ErrorCode::invalid_argument, "anisotropic-gaussian mask needs a reciprocal basis");
      }
      if (!(params.axis_scale > 0.0) || !std::isfinite(params.axis_scale)) {
        throw Error(ErrorCode::invalid_argument, "axis_scale must be positive");
      }
      break;
  }

  // Lattice-coordinate transform for the anisotropic mask: alpha = inv(B) k.
  double inv00 = 0.0, inv01 = 0.0, inv10 = 0.0, inv11 = 0.0;
  if (kind == MaskKind::anisotropic_gaussian) {
    const Vec2 b1 = reciprocal_basis[0];
    const Vec2 b2 = reciprocal_basis.size() > 1 ? reciprocal_basis[1] : Vec2{-b1.y, b1.x};
    const double det = b1.cross(b2);
    if (std::abs(det) < 1e-12 * b1.norm() * b2.norm() || !(b1.norm() > 0.0)) {
      throw Error(ErrorCode::invalid_argument, "reciprocal basis vectors are degenerate or collinear");
    }
    // B has columns b1, b2.
    inv00 = b2.y / det;
    inv01 = -b2.x / det;
    inv10 = -b1.y / det;
    inv11 = b1.x / det;
    mask.basis.assign(reciprocal_basis.begin(), reciprocal_basis.end());
  }

  for (int y = 0; y < height; ++y) {
    const double ky = fft_frequency(y, height);
    for (int x = 0; x < width; ++x) {
      const double kx = fft_frequency(x, width);
      const double k2 = kx * kx + ky * ky;
      double w = 1.0;
      switch (kind) {
        case MaskKind::lowpass:
          w = gaussian_rolloff(k2, params.k_max);
          break;
        case MaskKind::bandpass:
          w = std::clamp(gaussian_rolloff(k2, params.k_max) - gaussian_rolloff(k2, params.k_min),
                         0.0, 1.0);
          break;
        case MaskKind::anisotropic_gaussian: {
          const double a1 = inv00 * kx + inv01 * ky;
          const double a2 = inv10 * kx + inv11 * ky;
          w = std::exp(-0.5 * (a1 * a1 + a2 * a2) / (params.axis_scale * params.axis_scale));
          break;
        }
        default:
          break;
      }
      mask.weights(y, x) = w;
    }
  }
  return mask;
}

FourierMask custom_mask(Image weights) {
  const int h = weights.height();
  const int w = weights.width();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = weights(y, x);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "custom mask weights must lie in [0, 1]");
      }
      const double mirrored = weights((h - y) % h, (w - x) % w);
      if (std::abs(v - mirrored) > 1e-12) {
        throw Error(ErrorCode::invalid_argument, "custom mask must be symmetric under k -> -k");
      }
    }
  }
  FourierMask mask;
  mask.kind = MaskKind::custom;
  mask.weights = std::move(weights);
  return mask;
}

namespace {

// Sub-bin peak offset from three samples of a log-parabola.
double parabolic_offset(double left, double center, double right) {
  if (!(left > 0.0 && center > 0.0 && right > 0.0)) return 0.0;
  const double l = std::log(left), c = std::log(center), r = std::log(right);
  const double denom = l - 2.0 * c + r;
  if (!(denom < 0.0)) return 0.0;
  return std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
}

}  // namespace

std::vector<Vec2> detect_reciprocal_basis(std::span<const Image> frames) {
  if (frames.empty()) throw Error(ErrorCode::invalid_argument, "no frames to analyse");
  const int h = frames.front().height();
  const int w = frames.front().width();

  Image power(h, w, 0.0);
  for (const auto& frame : frames) {
    if (frame.height() != h || frame.width() != w) {
      throw Error(ErrorCode::shape_mismatch, "frames differ in shape");
    }
    const ComplexImage spectrum = fft::forward(apply_window(normalize_frame(frame), WindowKind::hann));
    auto p = power.values();
    auto s = spectrum.values();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += std::norm(s[i]);
  }

  std::vector<double> sorted(power.values().begin(), power.values().end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];
  const double noise_floor = 25.0 * median;
  const double dc_exclusion = 5.0 / std::min(h, w);

  struct Peak {
    Vec2 k;
    double power;
  };
  std::vector<Peak> peaks;
  for (int y = 0; y < h; ++y) {
    const double ky = fft_frequency(y, h);
    for (int x = 0; x < w; ++x) {
      const double kx = fft_frequency(x, w);
      if (!(ky > 0.0 || (ky == 0.0 && kx > 0.0))) continue;
      if (std::hypot(kx, ky) < dc_exclusion) continue;
      const double v = power(y, x);
      if (!(v > noise_floor)) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dy == 0 && dx == 0) continue;
          if (power((y + dy + h) % h, (x + dx + w) % w) > v) {
            is_max = false;
            break;
          }
        }
      }
      if (!is_max) continue;
      const double ox = parabolic_offset(power(y, (x - 1 + w) % w), v, power(y, (x + 1) % w));
      const double oy = parabolic_offset(power((y - 1 + h) % h, x), v, power((y + 1) % h, x));
      peaks.push_back({{kx + ox / w, ky + oy / h}, v});
    }
  }
  if (peaks.empty()) {
    throw Error(ErrorCode::detection_failed, "no lattice peaks above the noise floor; supply a basis");
  }

  // Primitive vectors are the shortest strong peaks; weak higher orders and
  // superstructure satellites are dropped relative to the brightest.
  const double brightest =
      std::max_element(peaks.begin(), peaks.end(),
                       [](const Peak& a, const Peak& b) { return a.power < b.power; })->power;
  std::erase_if(peaks, [&](const Peak& p) { return p.power < 0.05 * brightest; });
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    const double na = a.k.norm(), nb = b.k.norm();
    if (std::abs(na - nb) > 1e-9) return na < nb;
    return a.power > b.power;
  });

  std::vector<Vec2> basis{peaks.front().k};
  const double min_sine = std::sin(15.0 * std::numbers::pi / 180.0);
  for (std::size_t i = 1; i < peaks.size(); ++i) {
    const Vec2 k = peaks[i].k;
    if (std::abs(basis[0].cross(k)) > min_sine * basis[0].norm() * k.norm()) {
      basis.push_back(k);
      break;
    }
  }
  return basis;
}

std::vector<Vec2> detect_reciprocal_basis(const ImageStack& stack) {
  return detect_reciprocal_basis(std::span<const Image>(stack.frames));
}

CorrelationSurface correlate_spectra(const ComplexImage& fa, const ComplexImage& fb,
                                     CorrelationMethod method, const FourierMask* mask) {
  if (!fa.same_shape(fb)) throw Error(ErrorCode::shape_mismatch, "correlation inputs differ in shape");
  if (mask != nullptr && !fa.same_shape(mask->weights)) {
    throw Error(ErrorCode::shape_mismatch, "mask shape differs from the frames");
  }

  ComplexImage product(fa.height(), fa.width());
  auto a = fa.values();
  auto b = fb.values();
  auto out = product.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::conj(a[i]) * b[i];

  if (method != CorrelationMethod::cross) {
    double max_amplitude = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      max_amplitude = std::max(max_amplitude, std::abs(a[i]) * std::abs(b[i]));
    }
    const double eps = 1e-10 * max_amplitude;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double amplitude = std::abs(a[i]) * std::abs(b[i]) + eps;
      const double denom = method == CorrelationMethod::mutual ? std::sqrt(amplitude) : amplitude;
      out[i] = denom > 0.0 ? out[i] / denom : 0.0;
    }
  }

  if (mask != nullptr) {
    auto weights = mask->weights.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= weights[i];
  }

  double imag_ratio = 0.0;
  Image real = fft::inverse_real(product, &imag_ratio);
  for (double v : real.values()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::numerical_failure, "correlation produced non-finite values");
  }
  if (imag_ratio >= 1e-6) {
    std::ostringstream msg;
    msg << "correlation has an imaginary residue of " << imag_ratio << " relative to its maximum";
    throw Error(ErrorCode::numerical_failure, msg.str());
  }
  return CorrelationSurface{fftshift(real)};
}

CorrelationSurface correlate(const Image& a, const Image& b, CorrelationMethod method,
                             const FourierMask& mask) {
  if (!a.same_shape(b)) throw Error(ErrorCode::shape_mismatch, "correlation inputs differ in shape");
  return correlate_spectra(fft::forward(a), fft::forward(b), method, &mask);
}

CorrelationSurface correlate(const Image& a, const Image& b, CorrelationMethod method) {
  if (!a.same_shape(b)) throw Error(ErrorCode::shape_mismatch, "correlation inputs differ in shape");
  return correlate_spectra(fft::forward(a), fft::forward(b), method, nullptr);
}

}  // namespace stackreg
