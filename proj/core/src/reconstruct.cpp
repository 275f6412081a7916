#include "stackreg/reconstruct.hpp"

#include "stackreg/error.hpp"
#include "stackreg/fft.hpp"
#include "stackreg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace stackreg {

namespace {

// exp(-2 pi i f s) for one axis; the Nyquist bin of an even axis takes the
// real part so the shifted image stays real.
std::vector<std::complex<double>> phase_ramp(int n, double s) {
  std::vector<std::complex<double>> ramp(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (n % 2 == 0 && i == n / 2) {
      ramp[static_cast<std::size_t>(i)] = std::cos(std::numbers::pi * s);
    } else {
      const double angle = -2.0 * std::numbers::pi * fft_frequency(i, n) * s;
      ramp[static_cast<std::size_t>(i)] = std::polar(1.0, angle);
    }
  }
  return ramp;
}

double median_in_place(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
  return 0.5 * (lower + upper);
}

int mirror_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

}  // namespace

ShiftedFrame shift_frame(const Image& frame, Vec2 shift) {
  const int h = frame.height();
  const int w = frame.width();
  const double bound = std::min(h, w) / 4.0;
  if (!std::isfinite(shift.x) || !std::isfinite(shift.y) || shift.norm() >= bound) {
    std::ostringstream msg;
    msg << "shift (" << shift.x << ", " << shift.y << ") exceeds the sanity bound " << bound;
    throw Error(ErrorCode::shift_out_of_range, msg.str());
  }

  ShiftedFrame out;
  if (shift.x == 0.0 && shift.y == 0.0) {
    out.image = frame;
  } else {
    ComplexImage spectrum = fft::forward(frame);
    const auto ramp_x = phase_ramp(w, shift.x);
    const auto ramp_y = phase_ramp(h, shift.y);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        spectrum(y, x) *= ramp_y[static_cast<std::size_t>(y)] * ramp_x[static_cast<std::size_t>(x)];
      }
    }
    double imag_ratio = 0.0;
    out.image = fft::inverse_real(spectrum, &imag_ratio);
    if (imag_ratio >= 1e-6) {
      throw Error(ErrorCode::numerical_failure, "shifted frame has a non-negligible imaginary part");
    }
  }

  out.valid = Mask(h, w, 1);
  const int mx = static_cast<int>(std::ceil(std::abs(shift.x)));
  const int my = static_cast<int>(std::ceil(std::abs(shift.y)));
  for (int y = 0; y < h; ++y) {
    const bool row_wrapped = shift.y > 0 ? y < my : y >= h - my;
    for (int x = 0; x < w; ++x) {
      const bool col_wrapped = shift.x > 0 ? x < mx : x >= w - mx;
      if (row_wrapped || col_wrapped) out.valid(y, x) = 0;
    }
  }
  return out;
}

AverageImage average_stack(const ImageStack& stack, const ShiftSolution& solution, int threads) {
  const int n = static_cast<int>(stack.frames.size());
  if (static_cast<int>(solution.shifts.size()) != n) {
    throw Error(ErrorCode::shape_mismatch, "solution does not cover every frame of the stack");
  }
  std::vector<int> included;
  for (int f = 0; f < n; ++f) {
    if (solution.included(f)) included.push_back(f);
  }

  std::vector<ShiftedFrame> shifted(included.size());
  parallel_for(included.size(), threads, [&](std::size_t idx) {
    const int f = included[idx];
    shifted[idx] = shift_frame(stack.frames[static_cast<std::size_t>(f)],
                               -solution.shifts[static_cast<std::size_t>(f)]);
  });

  const int h = stack.metadata.height;
  const int w = stack.metadata.width;
  AverageImage avg{Image(h, w, 0.0), Grid<int>(h, w, 0), Mask(h, w, 0)};
  for (const auto& s : shifted) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!s.valid(y, x)) continue;
        avg.mean(y, x) += s.image(y, x);
        ++avg.count(y, x);
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int c = avg.count(y, x);
      if (c > 0) {
        avg.mean(y, x) /= c;
        avg.valid(y, x) = 1;
      }
    }
  }
  return avg;
}

Image gaussian_smooth(const Image& image, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::invalid_argument, "sigma must be positive");
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    const double v = std::exp(-0.5 * t * t / (sigma * sigma));
    kernel[static_cast<std::size_t>(t + radius)] = v;
    sum += v;
  }
  for (auto& v : kernel) v /= sum;

  const int h = image.height();
  const int w = image.width();
  Image tmp(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        acc += kernel[static_cast<std::size_t>(t + radius)] * image(y, mirror_index(x + t, w));
      }
      tmp(y, x) = acc;
    }
  }
  Image out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        acc += kernel[static_cast<std::size_t>(t + radius)] * tmp(mirror_index(y + t, h), x);
      }
      out(y, x) = acc;
    }
  }
  return out;
}

double estimate_snr(const Image& image, const Mask* valid) {
  if (valid != nullptr && !valid->same_shape(image)) {
    throw Error(ErrorCode::shape_mismatch, "validity mask does not match the image");
  }
  for (double v : image.values()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::non_finite_pixel, "image contains non-finite pixels");
  }
  const Image signal = gaussian_smooth(image, 2.0);

  double n = 0.0, s_sum = 0.0, s_sq = 0.0, r_sum = 0.0, r_sq = 0.0;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (valid != nullptr && !(*valid)(y, x)) continue;
      const double s = signal(y, x);
      const double r = image(y, x) - s;
      n += 1.0;
      s_sum += s;
      s_sq += s * s;
      r_sum += r;
      r_sq += r * r;
    }
  }
  if (n < 2.0) throw Error(ErrorCode::degenerate_input, "too few valid pixels for an SNR estimate");
  const double s_var = std::max(0.0, (s_sq - s_sum * s_sum / n) / (n - 1.0));
  const double r_var = std::max(0.0, (r_sq - r_sum * r_sum / n) / (n - 1.0));
  if (s_var == 0.0 && r_var == 0.0) throw Error(ErrorCode::degenerate_input, "constant image has no SNR");
  if (r_var == 0.0) return INFINITY;
  return std::sqrt(s_var / r_var);
}

Image power_spectrum(const Image& image) {
  const ComplexImage spectrum = fft::forward(image);
  Image mag(image.height(), image.width());
  for (std::size_t i = 0; i < mag.size(); ++i) {
    mag.values()[i] = std::log1p(std::abs(spectrum.values()[i]));
  }
  return fftshift(mag);
}

std::vector<double> azimuthal_median_profile(const Image& spectrum) {
  const int h = spectrum.height();
  const int w = spectrum.width();
  const int cy = h / 2;
  const int cx = w / 2;
  const int max_r = std::min(h - cy, w - cx);
  std::vector<std::vector<double>> bins(static_cast<std::size_t>(max_r));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto r = static_cast<int>(std::floor(std::hypot(y - cy, x - cx) + 0.5));
      if (r < max_r) bins[static_cast<std::size_t>(r)].push_back(spectrum(y, x));
    }
  }
  std::vector<double> profile;
  profile.reserve(bins.size());
  for (auto& b : bins) profile.push_back(median_in_place(b));
  return profile;
}

double wedge_median(const Image& spectrum, Vec2 direction, double half_angle, double k_lo,
                    double k_hi) {
  const double len = direction.norm();
  if (!(len > 0.0)) throw Error(ErrorCode::invalid_argument, "wedge direction must be nonzero");
  const Vec2 d = direction / len;
  const double cos_limit = std::cos(half_angle);
  const int h = spectrum.height();
  const int w = spectrum.width();
  std::vector<double> values;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec2 k{static_cast<double>(x - w / 2) / w, static_cast<double>(y - h / 2) / h};
      const double kn = k.norm();
      if (kn < k_lo || kn >= k_hi || kn == 0.0) continue;
      if (std::abs(k.dot(d)) / kn < cos_limit) continue;
      values.push_back(spectrum(y, x));
    }
  }
  if (values.empty()) throw Error(ErrorCode::invalid_argument, "wedge contains no spectrum samples");
  return median_in_place(values);
}

}  // namespace stackreg
