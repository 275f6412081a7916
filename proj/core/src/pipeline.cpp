#include "stackreg/pipeline.hpp"

#include "stackreg/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace stackreg {

namespace {

class StageTimer {
 public:
  explicit StageTimer(std::vector<std::pair<std::string, double>>& out) : out_(out) {}
  template <typename F>
  auto run(const char* name, F&& fn) {
    const auto start = std::chrono::steady_clock::now();
    struct Record {
      StageTimer& timer;
      const char* name;
      std::chrono::steady_clock::time_point start;
      ~Record() {
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
        timer.out_.emplace_back(name, dt.count());
      }
    } record{*this, name, start};
    return fn();
  }

 private:
  std::vector<std::pair<std::string, double>>& out_;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

RegistrationResult register_stack(const ImageStack& stack, const RegistrationConfig& config) {
  validate_stack(stack);
  if (stack.frames.size() < 2) throw Error(ErrorCode::too_few_frames, "registration needs at least 2 frames");

  RegistrationResult r;
  StageTimer timer(r.timing);
  const int threads = config.correlation.threads;

  r.mask = timer.run("mask", [&] {
    if (config.correlation.mask.kind == MaskKind::custom) {
      if (!config.custom_weights) {
        throw Error(ErrorCode::invalid_argument, "custom mask selected without weights");
      }
      return custom_mask(*config.custom_weights);
    }
    return resolve_mask(stack, config.correlation);
  });
  r.measured = timer.run("correlate", [&] { return compute_shift_matrix(stack, config.correlation, &r.mask); });

  OutlierOptions options;
  options.max_paths = config.max_paths;
  options.polynomial_order = config.polynomial_order;
  timer.run("detect", [&] {
    r.validity = detect_outliers(r.measured, config.outlier_method, config.outlier_threshold, options);
    r.excluded = exclude_bad_frames(r.validity, config.row_outlier_fraction);
    if (!r.excluded.empty()) {
      options.excluded = r.excluded;
      r.validity = detect_outliers(r.measured, config.outlier_method, config.outlier_threshold, options);
    }
    return 0;
  });
  r.repaired = timer.run("repair", [&] {
    return repair_outliers(r.measured, r.validity, config.max_paths, r.excluded);
  });
  r.solution = timer.run("solve", [&] { return optimal_shifts(r.repaired, r.excluded); });

  const int included = static_cast<int>(stack.frames.size() - r.solution.excluded.size());
  if (included >= 3) r.drift = drift_profile(r.solution, stack.metadata);

  r.average = timer.run("average", [&] { return average_stack(stack, r.solution, threads); });

  timer.run("snr", [&] {
    for (std::size_t f = 0; f < stack.frames.size(); ++f) {
      if (!r.solution.included(static_cast<int>(f))) continue;
      r.frame_snr.push_back(estimate_snr(stack.frames[f]));
    }
    r.frame_snr_median = median(r.frame_snr);
    Mask full(r.average.count.height(), r.average.count.width(), 0);
    for (std::size_t i = 0; i < full.size(); ++i) {
      full.values()[i] = r.average.count.values()[i] == included ? 1 : 0;
    }
    r.average_snr = estimate_snr(r.average.mean, &full);
    return 0;
  });
  return r;
}

std::vector<std::pair<int, int>> flagged_elements(const RegistrationResult& result) {
  std::vector<std::pair<int, int>> out;
  const int n = result.measured.size();
  for (int i = 0; i < n; ++i) {
    if (!result.solution.included(i)) continue;
    for (int j = i + 1; j < n; ++j) {
      if (result.solution.included(j) && !result.validity(i, j)) out.emplace_back(i, j);
    }
  }
  return out;
}

CompareMetrics compare_positions(std::span<const Vec2> a, std::span<const Vec2> b, double jump_threshold,
                                 std::span<const int> excluded_a, std::span<const int> excluded_b) {
  if (a.size() != b.size()) throw Error(ErrorCode::shape_mismatch, "position lists differ in length");
  CompareMetrics m;
  m.excluded_a.assign(excluded_a.begin(), excluded_a.end());
  m.excluded_b.assign(excluded_b.begin(), excluded_b.end());
  std::sort(m.excluded_a.begin(), m.excluded_a.end());
  std::sort(m.excluded_b.begin(), m.excluded_b.end());
  m.excluded_agree = m.excluded_a == m.excluded_b;

  auto in = [](const std::vector<int>& v, int f) { return std::binary_search(v.begin(), v.end(), f); };
  std::vector<int> frames;
  for (int f = 0; f < static_cast<int>(a.size()); ++f) {
    if (!in(m.excluded_a, f) && !in(m.excluded_b, f)) frames.push_back(f);
  }
  m.compared = static_cast<int>(frames.size());
  if (frames.empty()) return m;

  Vec2 offset;
  for (int f : frames) offset += a[static_cast<std::size_t>(f)] - b[static_cast<std::size_t>(f)];
  offset = offset / static_cast<double>(frames.size());
  double sq = 0.0;
  for (int f : frames) {
    const double e = (a[static_cast<std::size_t>(f)] - b[static_cast<std::size_t>(f)] - offset).norm();
    sq += e * e;
    m.max = std::max(m.max, e);
    if (e > jump_threshold) {
      ++m.jumps;
      m.jump_frames.push_back(f);
    }
  }
  m.rms = std::sqrt(sq / static_cast<double>(frames.size()));
  return m;
}

}  // namespace stackreg
