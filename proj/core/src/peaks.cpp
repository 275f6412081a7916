#include "stackreg/peaks.hpp"

#include "stackreg/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>

namespace stackreg {

std::string_view to_string(PeakMode mode) {
  return mode == PeakMode::argmax ? "argmax" : "gaussian-fit";
}

PeakMode parse_peak_mode(std::string_view name) {
  if (name == "argmax") return PeakMode::argmax;
  if (name == "gaussian-fit") return PeakMode::gaussian_fit;
  throw Error(ErrorCode::invalid_argument, "unknown peak mode '" + std::string(name) + "'");
}

std::vector<PixelCoord> find_local_maxima(const CorrelationSurface& surface, int k) {
  if (k < 1 || k > 10) throw Error(ErrorCode::invalid_argument, "candidate count must lie in [1, 10]");
  const Image& s = surface.values;
  std::vector<PixelCoord> maxima;
  for (int y = 1; y + 1 < s.height(); ++y) {
    for (int x = 1; x + 1 < s.width(); ++x) {
      const double v = s(y, x);
      bool dominant = true;
      for (int dy = -1; dy <= 1 && dominant; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dy == 0 && dx == 0) continue;
          const double n = s(y + dy, x + dx);
          const bool precedes = dy < 0 || (dy == 0 && dx < 0);
          if (precedes ? !(v > n) : !(v >= n)) {
            dominant = false;
            break;
          }
        }
      }
      if (dominant) maxima.push_back({y, x});
    }
  }
  std::stable_sort(maxima.begin(), maxima.end(), [&](const PixelCoord& a, const PixelCoord& b) {
    return s(a.row, a.col) > s(b.row, b.col);
  });
  if (maxima.size() > static_cast<std::size_t>(k)) maxima.resize(static_cast<std::size_t>(k));
  return maxima;
}

namespace {

using Params = Eigen::Matrix<double, 6, 1>;  // A, cx, cy, sx, sy, c (window-local centre)

struct Sample {
  double u;
  double v;
  double value;
};

double model(const Params& p, double u, double v) {
  const double du = u - p[1];
  const double dv = v - p[2];
  return p[0] * std::exp(-(du * du / (2.0 * p[3] * p[3]) + dv * dv / (2.0 * p[4] * p[4]))) + p[5];
}

double cost(const Params& p, const std::vector<Sample>& samples) {
  double sum = 0.0;
  for (const auto& s : samples) {
    const double r = s.value - model(p, s.u, s.v);
    sum += r * r;
  }
  return sum;
}

}  // namespace

std::optional<GaussianFit> fit_gaussian(const Image& values, int row, int col, int half) {
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>((2 * half + 1) * (2 * half + 1)));
  double lowest = values(row, col);
  for (int dy = -half; dy <= half; ++dy) {
    for (int dx = -half; dx <= half; ++dx) {
      const int y = row + dy;
      const int x = col + dx;
      if (y < 0 || x < 0 || y >= values.height() || x >= values.width()) continue;
      samples.push_back({static_cast<double>(dx), static_cast<double>(dy), values(y, x)});
      lowest = std::min(lowest, values(y, x));
    }
  }
  if (samples.size() < 12) return std::nullopt;

  // Initial guess from moments of the 3x3 core above the window minimum.
  double m0 = 0.0, mu = 0.0, mv = 0.0;
  for (const auto& s : samples) {
    if (std::abs(s.u) > 1.0 || std::abs(s.v) > 1.0) continue;
    const double w = s.value - lowest;
    m0 += w;
    mu += w * s.u;
    mv += w * s.v;
  }
  double muu = 0.0, mvv = 0.0, mw = 0.0;
  for (const auto& s : samples) {
    const double w = s.value - lowest;
    mw += w;
    muu += w * s.u * s.u;
    mvv += w * s.v * s.v;
  }
  const double amplitude0 = values(row, col) - lowest;
  if (!(amplitude0 > 0.0) || !(m0 > 0.0)) return std::nullopt;

  Params p;
  p << amplitude0, mu / m0, mv / m0,
      std::clamp(std::sqrt(std::max(muu / mw, 0.0)), 0.7, 3.0),
      std::clamp(std::sqrt(std::max(mvv / mw, 0.0)), 0.7, 3.0), lowest;

  const double window_limit = half + 0.5;
  double current = cost(p, samples);
  double lambda = 1e-3;
  int iteration = 0;
  for (; iteration < 100; ++iteration) {
    Eigen::Matrix<double, 6, 6> jtj = Eigen::Matrix<double, 6, 6>::Zero();
    Params jtr = Params::Zero();
    for (const auto& s : samples) {
      const double du = s.u - p[1];
      const double dv = s.v - p[2];
      const double sx2 = p[3] * p[3];
      const double sy2 = p[4] * p[4];
      const double e = std::exp(-(du * du / (2.0 * sx2) + dv * dv / (2.0 * sy2)));
      const double g = p[0] * e;
      Params j;
      j << e, g * du / sx2, g * dv / sy2, g * du * du / (sx2 * p[3]), g * dv * dv / (sy2 * p[4]), 1.0;
      const double r = s.value - (g + p[5]);
      jtj.noalias() += j * j.transpose();
      jtr.noalias() += j * r;
    }

    bool improved = false;
    double previous = current;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::Matrix<double, 6, 6> damped = jtj;
      for (int d = 0; d < 6; ++d) damped(d, d) += lambda * std::max(jtj(d, d), 1e-12);
      const Params step = damped.ldlt().solve(jtr);
      const Params trial = p + step;
      if (!step.allFinite() || trial[3] <= 0.0 || trial[4] <= 0.0) {
        lambda *= 10.0;
        continue;
      }
      const double trial_cost = cost(trial, samples);
      if (std::isfinite(trial_cost) && trial_cost <= current) {
        p = trial;
        current = trial_cost;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
    if (previous - current <= 1e-6 * std::max(previous, 1e-300)) break;
  }

  if (!std::isfinite(current) || !p.allFinite()) return std::nullopt;
  if (std::abs(p[1]) > window_limit || std::abs(p[2]) > window_limit) return std::nullopt;
  if (!(p[3] > 0.0) || !(p[4] > 0.0)) return std::nullopt;

  GaussianFit fit;
  fit.amplitude = p[0];
  fit.center_col = col + p[1];
  fit.center_row = row + p[2];
  fit.sigma_x = p[3];
  fit.sigma_y = p[4];
  fit.offset = p[5];
  fit.iterations = iteration;
  return fit;
}

Shift2D argmax_shift(const CorrelationSurface& surface) {
  const Image& s = surface.values;
  int best_row = surface.center_row();
  int best_col = surface.center_col();
  double best = -INFINITY;
  auto key = [&](int row, int col) {
    const int dy = row - surface.center_row();
    const int dx = col - surface.center_col();
    return std::array<long, 3>{static_cast<long>(dx) * dx + static_cast<long>(dy) * dy, dy, dx};
  };
  for (int y = 0; y < s.height(); ++y) {
    for (int x = 0; x < s.width(); ++x) {
      const double v = s(y, x);
      if (v > best || (v == best && key(y, x) < key(best_row, best_col))) {
        best = v;
        best_row = y;
        best_col = x;
      }
    }
  }
  const Vec2 shift = surface.shift_at(best_row, best_col);
  return Shift2D{shift.x, shift.y, best, false};
}

Shift2D fit_subpixel(const CorrelationSurface& surface, std::span<const PixelCoord> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::invalid_argument, "fit_subpixel needs at least one candidate");
  std::optional<GaussianFit> best;
  for (const auto& c : candidates) {
    const auto fit = fit_gaussian(surface.values, c.row, c.col);
    if (fit && fit->amplitude > 0.0 && (!best || fit->peak() > best->peak())) best = fit;
  }
  if (!best) return argmax_shift(surface);
  const Vec2 shift = surface.shift_at(best->center_row, best->center_col);
  return Shift2D{shift.x, shift.y, best->peak(), true};
}

Shift2D locate_peak(const CorrelationSurface& surface, PeakMode mode, int candidates) {
  if (mode == PeakMode::argmax) return argmax_shift(surface);
  const auto maxima = find_local_maxima(surface, candidates);
  if (maxima.empty()) return argmax_shift(surface);
  return fit_subpixel(surface, maxima);
}

}  // namespace stackreg
