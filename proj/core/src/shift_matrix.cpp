#include "stackreg/shift_matrix.hpp"

#include "stackreg/error.hpp"
#include "stackreg/fft.hpp"
#include "stackreg/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace stackreg {

ShiftMatrix::ShiftMatrix(int frame_count)
    : n_(frame_count),
      x_(frame_count, frame_count, 0.0),
      y_(frame_count, frame_count, 0.0),
      valid_(frame_count, frame_count, 1),
      score_(frame_count, frame_count, 0.0),
      refined_(frame_count, frame_count, 0) {}

ShiftMatrix ShiftMatrix::from_positions(std::span<const Vec2> positions) {
  ShiftMatrix m(static_cast<int>(positions.size()));
  for (int i = 0; i < m.n_; ++i) {
    for (int j = i + 1; j < m.n_; ++j) {
      m.set(i, j, positions[static_cast<std::size_t>(j)] - positions[static_cast<std::size_t>(i)]);
    }
  }
  return m;
}

void ShiftMatrix::set(int i, int j, Vec2 value) {
  if (i == j) return;
  x_(i, j) = value.x;
  y_(i, j) = value.y;
  x_(j, i) = -value.x;
  y_(j, i) = -value.y;
}

void ShiftMatrix::set_valid(int i, int j, bool is_valid) {
  valid_(i, j) = is_valid ? 1 : 0;
  valid_(j, i) = is_valid ? 1 : 0;
}

void ShiftMatrix::set_validity(const Mask& mask) {
  if (mask.height() != n_ || mask.width() != n_) {
    throw Error(ErrorCode::shape_mismatch, "validity mask does not match the matrix size");
  }
  valid_ = mask;
}

void ShiftMatrix::set_peak_info(int i, int j, double score, bool refined) {
  score_(i, j) = score;
  score_(j, i) = score;
  refined_(i, j) = refined ? 1 : 0;
  refined_(j, i) = refined ? 1 : 0;
}

FourierMask resolve_mask(const ImageStack& stack, const CorrelationSettings& settings) {
  const bool padded = settings.window == WindowKind::mirror_pad;
  const int h = padded ? 2 * stack.metadata.height : stack.metadata.height;
  const int w = padded ? 2 * stack.metadata.width : stack.metadata.width;
  const MaskSpec& spec = settings.mask;
  if (spec.kind != MaskKind::anisotropic_gaussian) {
    return build_mask(spec.kind, spec.params, h, w);
  }
  std::vector<Vec2> basis = spec.basis;
  if (basis.empty()) {
    if (!spec.auto_basis) {
      throw Error(ErrorCode::invalid_argument, "anisotropic-gaussian mask needs a basis or auto_basis");
    }
    basis = detect_reciprocal_basis(stack);
  }
  return build_mask(spec.kind, spec.params, h, w, basis);
}

ShiftMatrix compute_shift_matrix(const ImageStack& stack, const CorrelationSettings& settings,
                                 const FourierMask* mask) {
  const int n = static_cast<int>(stack.frames.size());
  if (n < 2) throw Error(ErrorCode::too_few_frames, "a stack needs at least 2 frames");

  FourierMask resolved;
  if (mask == nullptr) {
    resolved = resolve_mask(stack, settings);
    mask = &resolved;
  }
  const bool apply_mask = mask->kind != MaskKind::none;

  std::vector<ComplexImage> spectra(static_cast<std::size_t>(n));
  std::vector<char> usable(static_cast<std::size_t>(n), 1);
  parallel_for(static_cast<std::size_t>(n), settings.threads, [&](std::size_t f) {
    try {
      spectra[f] = fft::forward(preprocess_frame(stack.frames[f], settings.window));
    } catch (const Error&) {
      usable[f] = 0;
    }
  });

  struct PairResult {
    Shift2D shift;
    bool ok = false;
  };
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  std::vector<PairResult> results(pairs.size());
  parallel_for(pairs.size(), settings.threads, [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    if (!usable[static_cast<std::size_t>(i)] || !usable[static_cast<std::size_t>(j)]) return;
    try {
      const auto surface = correlate_spectra(spectra[static_cast<std::size_t>(i)],
                                             spectra[static_cast<std::size_t>(j)], settings.method,
                                             apply_mask ? mask : nullptr);
      results[p].shift = locate_peak(surface, settings.peak_mode, settings.candidates);
      results[p].ok = std::isfinite(results[p].shift.x) && std::isfinite(results[p].shift.y);
    } catch (const Error&) {
      results[p].ok = false;
    }
  });

  ShiftMatrix matrix(n);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    if (results[p].ok) {
      matrix.set(i, j, results[p].shift.vec());
      matrix.set_peak_info(i, j, results[p].shift.score, results[p].shift.refined);
    } else {
      matrix.set_valid(i, j, false);
    }
  }
  return matrix;
}

Vec2 path_sum(const ShiftMatrix& matrix, const Path& path) {
  Vec2 sum;
  for (std::size_t h = 1; h < path.size(); ++h) sum += matrix.at(path[h - 1], path[h]);
  return sum;
}

namespace {

bool path_valid(const Mask& valid, const Path& path) {
  for (std::size_t h = 1; h < path.size(); ++h) {
    if (!valid(path[h - 1], path[h])) return false;
  }
  return true;
}

std::optional<double> error_over(const ShiftMatrix& matrix, const Mask& valid, int i, int k,
                                 std::span<const Path> paths) {
  const Vec2 direct = matrix.at(i, k);
  double total = 0.0;
  int used = 0;
  for (const auto& path : paths) {
    if (!path_valid(valid, path)) continue;
    total += (direct - path_sum(matrix, path)).norm();
    ++used;
  }
  if (used == 0) return std::nullopt;
  return total / used;
}

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
  return 0.5 * (lower + upper);
}

std::vector<char> excluded_flags(int n, std::span<const int> excluded) {
  std::vector<char> flags(static_cast<std::size_t>(n), 0);
  for (int f : excluded) {
    if (f < 0 || f >= n) throw Error(ErrorCode::invalid_argument, "excluded frame index out of range");
    flags[static_cast<std::size_t>(f)] = 1;
  }
  return flags;
}

void symmetrize(Mask& mask) {
  for (int i = 0; i < mask.height(); ++i) {
    mask(i, i) = 1;
    for (int j = i + 1; j < mask.width(); ++j) {
      const std::uint8_t v = (mask(i, j) && mask(j, i)) ? 1 : 0;
      mask(i, j) = v;
      mask(j, i) = v;
    }
  }
}

std::size_t invalid_count(const Mask& mask) {
  return static_cast<std::size_t>(std::count(mask.values().begin(), mask.values().end(), std::uint8_t{0}));
}

class TransitivityDetector {
 public:
  TransitivityDetector(const ShiftMatrix& matrix, Mask measured, Mask start, double threshold, int max_paths)
      : m_(matrix), n_(matrix.size()), valid_(std::move(start)), measured_(std::move(measured)),
        threshold_(threshold), max_paths_(max_paths),
        entries_(static_cast<std::size_t>(n_) * n_), users_(entries_.size()) {}

  Mask run() {
    evaluate_all();
    for (int round = 0; round < 10; ++round) {
      prune();
      if (!readmit()) break;
    }
    prune();
    return valid_;
  }

 private:
  struct Entry {
    std::optional<double> error;
    std::vector<std::size_t> hops;
    /// Paths whose equation misses by more than the threshold, and their hops.
    int failing = 0;
    std::vector<std::size_t> failing_hops;
  };

  std::size_t key(int i, int k) const {
    return i < k ? static_cast<std::size_t>(i) * n_ + k : static_cast<std::size_t>(k) * n_ + i;
  }

  void evaluate(int i, int k) {
    const std::size_t self = key(i, k);
    Entry& entry = entries_[self];
    for (std::size_t hop : entry.hops) users_[hop].erase(self);
    entry.hops.clear();

    const HopFilter usable = [this](int a, int b) { return valid_(a, b) != 0; };
    const auto paths = select_paths(i, k, n_, max_paths_, usable);
    entry.error = error_over(m_, valid_, i, k, paths);
    entry.failing = 0;
    entry.failing_hops.clear();
    const Vec2 direct = m_.at(i, k);
    for (const auto& path : paths) {
      const bool fails = (direct - path_sum(m_, path)).norm() > threshold_;
      entry.failing += fails ? 1 : 0;
      for (std::size_t h = 1; h < path.size(); ++h) {
        const std::size_t hop = key(path[h - 1], path[h]);
        entry.hops.push_back(hop);
        users_[hop].insert(self);
        if (fails) entry.failing_hops.push_back(hop);
      }
    }
  }

  void evaluate_all() {
    for (int i = 0; i < n_; ++i) {
      for (int k = i + 1; k < n_; ++k) {
        if (valid_(i, k)) evaluate(i, k);
      }
    }
  }

  bool any_over_threshold() const {
    for (int i = 0; i < n_; ++i) {
      for (int k = i + 1; k < n_; ++k) {
        const auto& err = entries_[key(i, k)].error;
        if (valid_(i, k) && err && *err > threshold_) return true;
      }
    }
    return false;
  }

  void refresh(int i, int k) {
    const std::vector<std::size_t> dependents(users_[key(i, k)].begin(), users_[key(i, k)].end());
    for (std::size_t d : dependents) {
      const int a = static_cast<int>(d / n_);
      const int b = static_cast<int>(d % n_);
      if (valid_(a, b)) evaluate(a, b);
    }
  }

  // Invalidates elements scoring above threshold until none remain. Each
  // step takes the element that appears in the most failing path equations
  // (its own and as a hop of others), then the largest score: a bad
  // consecutive registration spoils many long-span scores, and those must
  // not be blamed before it.
  void prune() {
    std::vector<int> blame(entries_.size());
    while (any_over_threshold()) {
      std::fill(blame.begin(), blame.end(), 0);
      for (int i = 0; i < n_; ++i) {
        for (int k = i + 1; k < n_; ++k) {
          if (!valid_(i, k)) continue;
          const Entry& e = entries_[key(i, k)];
          blame[key(i, k)] += e.failing;
          for (std::size_t hop : e.failing_hops) ++blame[hop];
        }
      }
      int best_i = -1, best_k = -1, most = -1;
      double worst = -1.0;
      for (int i = 0; i < n_; ++i) {
        for (int k = i + 1; k < n_; ++k) {
          const auto& err = entries_[key(i, k)].error;
          if (!valid_(i, k) || !err || *err <= threshold_) continue;
          const int b = blame[key(i, k)];
          if (b > most || (b == most && *err > worst)) {
            most = b;
            worst = *err;
            best_i = i;
            best_k = k;
          }
        }
      }
      valid_(best_i, best_k) = 0;
      valid_(best_k, best_i) = 0;
      refresh(best_i, best_k);
    }
  }

  // Restores invalidated measurements that agree with the surviving matrix.
  bool readmit() {
    std::vector<std::pair<int, int>> restored;
    for (int i = 0; i < n_; ++i) {
      for (int k = i + 1; k < n_; ++k) {
        if (valid_(i, k) || !measured_(i, k)) continue;
        evaluate(i, k);
        const auto& err = entries_[key(i, k)].error;
        if (err && *err <= threshold_) restored.emplace_back(i, k);
      }
    }
    if (restored.empty()) return false;
    for (const auto& [i, k] : restored) {
      valid_(i, k) = 1;
      valid_(k, i) = 1;
    }
    for (int i = 0; i < n_; ++i) {
      for (int k = i + 1; k < n_; ++k) {
        if (valid_(i, k)) evaluate(i, k);
      }
    }
    return true;
  }

  const ShiftMatrix& m_;
  int n_;
  Mask valid_;
  Mask measured_;
  double threshold_;
  int max_paths_;
  std::vector<Entry> entries_;
  std::vector<std::set<std::size_t>> users_;
};

Mask detect_neighbor(const ShiftMatrix& matrix, const Mask& valid, double threshold) {
  const int n = matrix.size();
  Mask out = valid;
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k < n; ++k) {
      if (!valid(i, k)) continue;
      std::vector<double> xs, ys;
      for (int di = -1; di <= 1; ++di) {
        for (int dk = -1; dk <= 1; ++dk) {
          if (di == 0 && dk == 0) continue;
          const int a = i + di, b = k + dk;
          if (a < 0 || b < 0 || a >= n || b >= n || !valid(a, b)) continue;
          xs.push_back(matrix.x()(a, b));
          ys.push_back(matrix.y()(a, b));
        }
      }
      if (xs.empty()) continue;
      const Vec2 median{median_of(xs), median_of(ys)};
      if ((matrix.at(i, k) - median).norm() > threshold) {
        out(i, k) = 0;
        out(k, i) = 0;
      }
    }
  }
  return out;
}

Mask detect_background(const ShiftMatrix& matrix, const Mask& valid, double threshold, int order) {
  const int n = matrix.size();
  if (order < 0) throw Error(ErrorCode::invalid_argument, "polynomial order must be non-negative");
  std::vector<std::pair<int, int>> terms;
  for (int total = 0; total <= order; ++total) {
    for (int a = total; a >= 0; --a) terms.emplace_back(a, total - a);
  }
  const double scale = n > 1 ? 2.0 / (n - 1) : 1.0;
  auto basis = [&](int i, int j, Eigen::Index t) {
    const double u = i * scale - 1.0;
    const double v = j * scale - 1.0;
    return std::pow(u, terms[static_cast<std::size_t>(t)].first) *
           std::pow(v, terms[static_cast<std::size_t>(t)].second);
  };

  Mask current = valid;
  for (int iteration = 0; iteration < 10; ++iteration) {
    std::vector<std::pair<int, int>> samples;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j && current(i, j)) samples.emplace_back(i, j);
      }
    }
    const auto nterms = static_cast<Eigen::Index>(terms.size());
    if (static_cast<Eigen::Index>(samples.size()) <= nterms) return current;

    Eigen::MatrixXd design(static_cast<Eigen::Index>(samples.size()), nterms);
    Eigen::VectorXd bx(design.rows()), by(design.rows());
    for (Eigen::Index r = 0; r < design.rows(); ++r) {
      const auto [i, j] = samples[static_cast<std::size_t>(r)];
      for (Eigen::Index t = 0; t < nterms; ++t) design(r, t) = basis(i, j, t);
      bx[r] = matrix.x()(i, j);
      by[r] = matrix.y()(i, j);
    }
    const auto qr = design.colPivHouseholderQr();
    const Eigen::VectorXd cx = qr.solve(bx);
    const Eigen::VectorXd cy = qr.solve(by);

    Mask next = valid;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j || !valid(i, j)) continue;
        double fx = 0.0, fy = 0.0;
        for (Eigen::Index t = 0; t < nterms; ++t) {
          const double b = basis(i, j, t);
          fx += cx[t] * b;
          fy += cy[t] * b;
        }
        if (std::hypot(matrix.x()(i, j) - fx, matrix.y()(i, j) - fy) > threshold) next(i, j) = 0;
      }
    }
    symmetrize(next);
    if (next == current) return next;
    current = std::move(next);
  }
  return current;
}

// Judges every measured element against the component-wise median of its
// two-hop relations R_ij + R_jk over the intermediates j whose hops are
// currently valid, starting from all measured hops. Repeats until stable.
Mask median_screen(const ShiftMatrix& matrix, const Mask& measured, Mask valid, double threshold) {
  const int n = matrix.size();
  std::vector<double> xs, ys;
  for (int round = 0; round < 5; ++round) {
    Mask next = valid;
    for (int i = 0; i < n; ++i) {
      for (int k = i + 1; k < n; ++k) {
        if (!measured(i, k)) continue;
        xs.clear();
        ys.clear();
        for (int j = 0; j < n; ++j) {
          if (j == i || j == k || !valid(i, j) || !valid(j, k)) continue;
          const Vec2 s = matrix.at(i, j) + matrix.at(j, k);
          xs.push_back(s.x);
          ys.push_back(s.y);
        }
        if (xs.size() < 3) continue;
        const Vec2 consensus{median_of(xs), median_of(ys)};
        const bool ok = (matrix.at(i, k) - consensus).norm() <= threshold;
        next(i, k) = ok ? 1 : 0;
        next(k, i) = ok ? 1 : 0;
      }
    }
    if (next == valid) break;
    valid = std::move(next);
  }
  return valid;
}

}  // namespace


std::optional<double> transitivity_error(const ShiftMatrix& matrix, int i, int k,
                                         std::span<const Path> paths) {
  if (paths.empty()) throw Error(ErrorCode::invalid_argument, "transitivity_error needs at least one path");
  return error_over(matrix, matrix.validity(), i, k, paths);
}

std::string_view to_string(OutlierMethod method) {
  switch (method) {
    case OutlierMethod::transitivity: return "transitivity";
    case OutlierMethod::neighbor: return "neighbor";
    case OutlierMethod::background_fit: return "background-fit";
  }
  return "transitivity";
}

OutlierMethod parse_outlier_method(std::string_view name) {
  if (name == "transitivity") return OutlierMethod::transitivity;
  if (name == "neighbor") return OutlierMethod::neighbor;
  if (name == "background-fit") return OutlierMethod::background_fit;
  throw Error(ErrorCode::invalid_argument, "unknown outlier method '" + std::string(name) + "'");
}

Mask detect_outliers(const ShiftMatrix& matrix, OutlierMethod method, double threshold,
                     const OutlierOptions& options) {
  if (!(threshold > 0.0)) throw Error(ErrorCode::invalid_argument, "outlier threshold must be positive");
  if (options.max_paths < 1) throw Error(ErrorCode::invalid_argument, "max_paths must be at least 1");
  const int n = matrix.size();
  const auto excluded = excluded_flags(n, options.excluded);

  Mask valid = matrix.validity();
  symmetrize(valid);
  for (int f = 0; f < n; ++f) {
    if (!excluded[static_cast<std::size_t>(f)]) continue;
    for (int j = 0; j < n; ++j) {
      if (j == f) continue;
      valid(f, j) = 0;
      valid(j, f) = 0;
    }
  }

  switch (method) {
    case OutlierMethod::transitivity:
    {
      // Two greedy starts, from the measured mask and from the median
      // screen; keep whichever leaves the matrix consistent with fewer
      // invalid elements (the measured start on a tie).
      Mask direct = TransitivityDetector(matrix, valid, valid, threshold, options.max_paths).run();
      Mask screened = TransitivityDetector(matrix, valid, median_screen(matrix, valid, valid, threshold), threshold,
                                           options.max_paths)
                          .run();
      return invalid_count(screened) < invalid_count(direct) ? screened : direct;
    }
    case OutlierMethod::neighbor:
      return detect_neighbor(matrix, valid, threshold);
    case OutlierMethod::background_fit:
      return detect_background(matrix, valid, threshold, options.polynomial_order);
  }
  return valid;
}

std::vector<int> exclude_bad_frames(const Mask& validity, double row_outlier_fraction) {
  if (!(row_outlier_fraction > 0.0 && row_outlier_fraction <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "row_outlier_fraction must lie in (0, 1]");
  }
  const int n = validity.height();
  std::vector<int> excluded;
  for (int i = 0; i < n; ++i) {
    int invalid = 0;
    for (int j = 0; j < n; ++j) {
      if (j != i && !validity(i, j)) ++invalid;
    }
    if (n > 1 && invalid > row_outlier_fraction * (n - 1)) excluded.push_back(i);
  }
  if (static_cast<int>(excluded.size()) == n) {
    throw Error(ErrorCode::registration_failed, "every frame exceeds the row outlier fraction");
  }
  return excluded;
}

ShiftMatrix repair_outliers(const ShiftMatrix& matrix, const Mask& validity, int max_paths,
                            std::span<const int> excluded) {
  if (max_paths < 1) throw Error(ErrorCode::invalid_argument, "max_paths must be at least 1");
  const int n = matrix.size();
  const auto skip = excluded_flags(n, excluded);

  ShiftMatrix out = matrix;
  Mask valid = validity;
  symmetrize(valid);
  for (int f = 0; f < n; ++f) {
    if (!skip[static_cast<std::size_t>(f)]) continue;
    for (int j = 0; j < n; ++j) {
      if (j == f) continue;
      valid(f, j) = 0;
      valid(j, f) = 0;
    }
  }

  std::vector<std::pair<int, int>> pending;
  for (int i = 0; i < n; ++i) {
    if (skip[static_cast<std::size_t>(i)]) continue;
    for (int k = i + 1; k < n; ++k) {
      if (!skip[static_cast<std::size_t>(k)] && !valid(i, k)) pending.emplace_back(i, k);
    }
  }

  const HopFilter usable = [&valid](int a, int b) { return valid(a, b) != 0; };
  while (!pending.empty()) {
    std::size_t best = pending.size();
    std::vector<Path> best_paths;
    for (std::size_t p = 0; p < pending.size(); ++p) {
      const auto [i, k] = pending[p];
      auto paths = select_paths(i, k, n, max_paths, usable);
      if (paths.empty()) continue;
      bool better = best == pending.size() || paths.size() > best_paths.size();
      if (!better && paths.size() == best_paths.size()) {
        const auto [bi, bk] = pending[best];
        better = std::make_pair(k - i, i) < std::make_pair(bk - bi, bi);
      }
      if (better) {
        best = p;
        best_paths = std::move(paths);
      }
    }
    if (best == pending.size()) {
      std::ostringstream msg;
      msg << "no all-valid transitivity path for " << pending.size() << " element(s):";
      for (const auto& [i, k] : pending) msg << " (" << i << "," << k << ")";
      throw Error(ErrorCode::unrepairable_element, msg.str());
    }

    const auto [i, k] = pending[best];
    std::vector<double> xs, ys;
    for (const auto& path : best_paths) {
      const Vec2 s = path_sum(out, path);
      xs.push_back(s.x);
      ys.push_back(s.y);
    }
    out.set(i, k, {median_of(xs), median_of(ys)});
    valid(i, k) = 1;
    valid(k, i) = 1;
    pending.erase(pending.begin() + static_cast<long>(best));
  }

  out.set_validity(valid);
  return out;
}

bool ShiftSolution::included(int frame) const {
  return std::find(excluded.begin(), excluded.end(), frame) == excluded.end();
}

ShiftSolution optimal_shifts(const ShiftMatrix& matrix, std::span<const int> excluded) {
  const int n = matrix.size();
  const auto skip = excluded_flags(n, excluded);
  std::vector<int> included;
  for (int i = 0; i < n; ++i) {
    if (!skip[static_cast<std::size_t>(i)]) included.push_back(i);
  }
  if (included.empty()) throw Error(ErrorCode::registration_failed, "no frames left to solve for");

  ShiftSolution solution;
  solution.shifts.assign(static_cast<std::size_t>(n), Vec2{});
  solution.excluded.assign(excluded.begin(), excluded.end());
  std::sort(solution.excluded.begin(), solution.excluded.end());
  solution.excluded.erase(std::unique(solution.excluded.begin(), solution.excluded.end()),
                          solution.excluded.end());

  const double count = static_cast<double>(included.size());
  for (int i : included) {
    Vec2 row_sum;
    for (int j : included) {
      if (i != j && !matrix.valid(i, j)) {
        std::ostringstream msg;
        msg << "element (" << i << "," << j << ") is invalid; repair outliers before solving";
        throw Error(ErrorCode::invalid_argument, msg.str());
      }
      row_sum += matrix.at(i, j);
    }
    solution.shifts[static_cast<std::size_t>(i)] = -row_sum / count;
  }
  return solution;
}

DriftProfile drift_profile(const ShiftSolution& solution, const StackMetadata& metadata) {
  DriftProfile profile;
  const double scale = metadata.pixel_size.value_or(1.0);
  profile.unit = metadata.pixel_size ? "angstrom" : "px";
  for (int f = 0; f < static_cast<int>(solution.shifts.size()); ++f) {
    if (!solution.included(f)) continue;
    profile.frames.push_back(f);
    profile.times.push_back(f * metadata.frame_time);
    profile.positions.push_back(solution.shifts[static_cast<std::size_t>(f)] * scale);
  }
  const int m = static_cast<int>(profile.frames.size());
  if (m < 3) throw Error(ErrorCode::invalid_argument, "drift profile needs at least 3 included frames");

  // Gaussian smoothing over the frame sequence, sigma = 1 frame, truncated
  // at 4 sigma. Point reflection at the ends keeps linear trends unbiased.
  constexpr int radius = 4;
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    kernel[static_cast<std::size_t>(t + radius)] = std::exp(-0.5 * t * t);
    norm += kernel[static_cast<std::size_t>(t + radius)];
  }
  for (auto& k : kernel) k /= norm;

  auto sample = [&](int idx) -> Vec2 {
    const auto& p = profile.positions;
    if (idx < 0) {
      const int mirror = std::min(-idx, m - 1);
      return 2.0 * p.front() - p[static_cast<std::size_t>(mirror)];
    }
    if (idx >= m) {
      const int mirror = std::max(2 * (m - 1) - idx, 0);
      return 2.0 * p.back() - p[static_cast<std::size_t>(mirror)];
    }
    return p[static_cast<std::size_t>(idx)];
  };
  profile.smoothed.resize(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    Vec2 acc;
    for (int t = -radius; t <= radius; ++t) {
      acc += kernel[static_cast<std::size_t>(t + radius)] * sample(j + t);
    }
    profile.smoothed[static_cast<std::size_t>(j)] = acc;
  }

  const auto& s = profile.smoothed;
  const auto& t = profile.times;
  profile.velocities.resize(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const int lo = std::max(j - 1, 0);
    const int hi = std::min(j + 1, m - 1);
    profile.velocities[static_cast<std::size_t>(j)] =
        (s[static_cast<std::size_t>(hi)] - s[static_cast<std::size_t>(lo)]) /
        (t[static_cast<std::size_t>(hi)] - t[static_cast<std::size_t>(lo)]);
  }
  return profile;
}

}  // namespace stackreg
