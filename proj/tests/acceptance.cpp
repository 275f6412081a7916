// Acceptance suite: one PASS/FAIL line per criterion.
//
//   stackreg_acceptance [--only N[,M...]] [--known-failure N[,M...]]
//
// Exit status is nonzero when a criterion fails that was not listed with
// --known-failure.

#include "stackreg/error.hpp"
#include "stackreg/peaks.hpp"
#include "stackreg/pipeline.hpp"
#include "stackreg/preprocess.hpp"
#include "stackreg/reconstruct.hpp"
#include "stackreg/report.hpp"
#include "stackreg/shift_matrix.hpp"
#include "stackreg/spectral.hpp"
#include "stackreg/synth.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace stackreg;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double half_lattice(const SynthParams& p) { return 0.5 * std::min(p.a1.norm(), p.a2.norm()); }

// 1. Row-mean solver vs. a dense least-squares solve of
//    min sum_{i != j} |R_ij + r_i - r_j|^2 with the gauge sum r = 0.
Outcome solver_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr int kTrials = 100;
  constexpr int n = 10;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  double worst = 0.0;
  for (int t = 0; t < kTrials; ++t) {
    ShiftMatrix m(n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) m.set(i, j, {u(rng), u(rng)});

    // One equation per ordered pair and axis, plus two gauge rows.
    const int rows = n * (n - 1) + 1;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, n);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(rows, 2);
    int row = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        a(row, j) = 1.0;
        a(row, i) = -1.0;
        b(row, 0) = m.at(i, j).x;
        b(row, 1) = m.at(i, j).y;
        ++row;
      }
    }
    a.row(row).setOnes();
    const Eigen::MatrixXd ref = a.colPivHouseholderQr().solve(b);

    const ShiftSolution s = optimal_shifts(m);
    for (int i = 0; i < n; ++i) {
      worst = std::max({worst, std::abs(s.shifts[i].x - ref(i, 0)), std::abs(s.shifts[i].y - ref(i, 1))});
    }
  }
  const double dt = seconds_since(t0);
  return {worst <= 1e-9 && dt < 10.0, fmt("max component error %.2e (tol 1e-9), %.2f s (limit 10 s)", worst, dt)};
}

// 2. paper-like-40 end to end over 10 seeds.
Outcome end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_rms = 0.0;
  int jumps = 0;
  double snr = 0.0;
  for (int seed = 1; seed <= 10; ++seed) {
    SynthParams p = synth_preset("paper-like-40");
    p.seed = static_cast<std::uint64_t>(seed);
    const SynthResult syn = generate_stack(p);
    const RegistrationResult r = register_stack(syn.stack, RegistrationConfig{});
    const CompareMetrics m = compare_positions(r.solution.shifts, syn.truth.positions, half_lattice(p), r.excluded);
    worst_rms = std::max(worst_rms, m.rms);
    jumps += m.jumps;
    snr += r.frame_snr_median / 10.0;
  }
  const double dt = seconds_since(t0);
  return {worst_rms < 0.2 && jumps == 0 && dt < 120.0,
          fmt("worst RMS %.4f px (limit 0.2), jumps %d, mean frame SNR %.2f, %.1f s (limit 120 s)", worst_rms, jumps,
              snr, dt)};
}

// 3. Detection and repair on noisy ideal matrices with 10% lattice hops.
Outcome outlier_repair() {
  constexpr int kTrials = 50;
  constexpr int n = 20;
  const double lattice = 8.0;
  std::mt19937_64 rng(33);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::uniform_real_distribution<double> pos(-15.0, 15.0);
  int tp = 0, fp = 0, fn = 0;
  double worst_repair = 0.0, worst_exact = 0.0;
  for (int t = 0; t < kTrials; ++t) {
    std::vector<Vec2> p(n);
    for (auto& v : p) v = {pos(rng), pos(rng)};
    const ShiftMatrix ideal = ShiftMatrix::from_positions(p);
    ShiftMatrix m = ideal;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) m.set(i, j, ideal.at(i, j) + Vec2{noise(rng), noise(rng)});

    std::vector<std::pair<int, int>> upper;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) upper.emplace_back(i, j);
    std::shuffle(upper.begin(), upper.end(), rng);
    const std::size_t hops = upper.size() / 10;
    std::set<std::pair<int, int>> injected;
    const Vec2 steps[] = {{lattice, 0}, {-lattice, 0}, {0, lattice}, {0, -lattice}};
    for (std::size_t h = 0; h < hops; ++h) {
      const auto [i, j] = upper[h];
      m.set(i, j, m.at(i, j) + steps[rng() % 4]);
      injected.insert(upper[h]);
    }

    const Mask valid = detect_outliers(m, OutlierMethod::transitivity, 2.0);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const bool flagged = valid(i, j) == 0;
        const bool hop = injected.count({i, j}) > 0;
        tp += flagged && hop;
        fp += flagged && !hop;
        fn += !flagged && hop;
      }
    }
    const ShiftMatrix repaired = repair_outliers(m, valid);
    // Same repair from the exact hop mask, to separate detection from path noise.
    Mask exact(n, n, 1);
    for (const auto& [i, j] : injected) exact(i, j) = exact(j, i) = 0;
    const ShiftMatrix reference = repair_outliers(m, exact);
    for (const auto& [i, j] : injected) {
      worst_repair = std::max(worst_repair, (repaired.at(i, j) - ideal.at(i, j)).norm());
      worst_exact = std::max(worst_exact, (reference.at(i, j) - ideal.at(i, j)).norm());
    }
  }
  const double precision = tp + fp > 0 ? double(tp) / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? double(tp) / (tp + fn) : 0.0;
  return {precision >= 0.99 && recall >= 0.99 && worst_repair <= 0.3,
          fmt("precision %.4f recall %.4f (min 0.99), worst repaired error %.3f px (limit 0.3; %.3f px from the "
              "exact hop mask)",
              precision, recall, worst_repair, worst_exact)};
}

// 4. Gaussian fit vs. argmax on consecutive pairs of the ambiguous preset.
Outcome subpixel_benefit() {
  int pairs = 0, jumps_argmax = 0, jumps_fit = 0;
  for (int seed = 1; seed <= 8; ++seed) {
    SynthParams p = synth_preset("ambiguous");
    p.seed = static_cast<std::uint64_t>(seed);
    // Redraw the explicit drift for this seed.
    p = inject_unit_cell_ambiguity(p);
    const SynthResult syn = generate_stack(p);
    const double thr = half_lattice(p);
    for (int i = 0; i + 1 < p.frame_count; ++i) {
      const CorrelationSurface s = correlate(preprocess_frame(syn.stack.frames[i], WindowKind::hann),
                                             preprocess_frame(syn.stack.frames[i + 1], WindowKind::hann));
      const Vec2 truth = syn.truth.positions[i + 1] - syn.truth.positions[i];
      jumps_argmax += (locate_peak(s, PeakMode::argmax, 5).vec() - truth).norm() > thr;
      jumps_fit += (locate_peak(s, PeakMode::gaussian_fit, 5).vec() - truth).norm() > thr;
      ++pairs;
    }
  }
  const double rate = double(jumps_argmax) / pairs;
  const double reduction = jumps_argmax > 0 ? 1.0 - double(jumps_fit) / jumps_argmax : 0.0;
  return {pairs >= 100 && rate >= 0.10 && reduction >= 0.25,
          fmt("%d pairs, argmax jumps %d (%.1f%%, need >= 10%%), fit jumps %d, reduction %.0f%% (min 25%%)", pairs,
              jumps_argmax, 100.0 * rate, jumps_fit, 100.0 * reduction)};
}

// 5. Lowpass / matched / wide masks on noisy pairs. A jump is an error above
//    half the lattice spacing; precision is the RMS error of the other pairs.
Outcome mask_regimes() {
  constexpr int kTrials = 50;
  struct Regime {
    const char* name;
    double k_max;
    int jumps = 0;
    double sq = 0.0;
    int good = 0;
  };
  SynthParams base = synth_preset("ambiguous");
  const double b = 1.0 / base.a1.norm();
  Regime regimes[] = {{"lowpass", b / 3.0}, {"matched", b}, {"wide", 0.5}};
  int trials = 0;
  for (int seed = 1; trials < kTrials; ++seed) {
    SynthParams p = base;
    p.seed = static_cast<std::uint64_t>(seed);
    p.background = 1.5;
    p.background_scale = 16.0;
    p.dose = 4.0;
    p = inject_unit_cell_ambiguity(p);
    const SynthResult syn = generate_stack(p);
    const double thr = half_lattice(p);
    for (int i = 0; i + 1 < p.frame_count && trials < kTrials; ++i, ++trials) {
      const Image fa = preprocess_frame(syn.stack.frames[i], WindowKind::hann);
      const Image fb = preprocess_frame(syn.stack.frames[i + 1], WindowKind::hann);
      const Vec2 truth = syn.truth.positions[i + 1] - syn.truth.positions[i];
      for (auto& r : regimes) {
        const FourierMask mask = build_mask(MaskKind::lowpass, MaskParams{r.k_max}, fa.height(), fa.width());
        const double e = (locate_peak(correlate(fa, fb, CorrelationMethod::cross, mask), PeakMode::gaussian_fit, 5).vec() -
                          truth)
                             .norm();
        if (e > thr) {
          ++r.jumps;
        } else {
          r.sq += e * e;
          ++r.good;
        }
      }
    }
  }
  auto rms = [](const Regime& r) { return r.good > 0 ? std::sqrt(r.sq / r.good) : INFINITY; };
  const auto& [low, matched, wide] = regimes;
  const bool pass = low.jumps == 0 && matched.jumps < wide.jumps && 2.0 * rms(matched) <= rms(low);
  return {pass, fmt("jumps lowpass %d / matched %d / wide %d; RMS lowpass %.3f matched %.3f px (%.1fx, min 2x)",
                    low.jumps, matched.jumps, wide.jumps, rms(low), rms(matched), rms(low) / rms(matched))};
}

// 6. SNR of the average relative to single frames.
Outcome snr_scaling() {
  bool pass = true;
  std::ostringstream detail;
  for (int n : {10, 25, 40}) {
    SynthParams p = synth_preset("paper-like-40");
    p.frame_count = n;
    p.seed = 6;
    const SynthResult syn = generate_stack(p);
    const RegistrationResult r = register_stack(syn.stack, RegistrationConfig{});
    const double included = double(r.frame_snr.size());
    const double k = r.average_snr / r.frame_snr_median / std::sqrt(included);
    pass = pass && k >= 0.6 && k <= 1.0;
    detail << fmt("N'=%d ratio %.3f sqrt(N') ", int(included), k);
  }
  detail << "(range 0.6-1.0)";
  return {pass, detail.str()};
}

// 7. Burst-corrupted frames are excluded.
Outcome frame_exclusion() {
  constexpr int kTrials = 50;
  int exact = 0, rms_ok = 0;
  for (int t = 1; t <= kTrials; ++t) {
    SynthParams p = synth_preset("paper-like-40");
    p.frame_count = 20;
    p.seed = static_cast<std::uint64_t>(700 + t);
    std::mt19937_64 rng(static_cast<std::uint64_t>(t));
    std::vector<int> frames(20);
    for (int i = 0; i < 20; ++i) frames[i] = i;
    std::shuffle(frames.begin(), frames.end(), rng);
    p.corrupt_frames = {std::min(frames[0], frames[1]), std::max(frames[0], frames[1])};
    const SynthResult syn = generate_stack(p);
    try {
      const RegistrationResult r = register_stack(syn.stack, RegistrationConfig{});
      const bool ok = r.excluded == p.corrupt_frames;
      exact += ok;
      const CompareMetrics m =
          compare_positions(r.solution.shifts, syn.truth.positions, half_lattice(p), r.excluded, p.corrupt_frames);
      rms_ok += ok && m.rms < 0.2 && m.jumps == 0;
    } catch (const Error&) {
    }
  }
  return {exact >= 45 && rms_ok == exact,
          fmt("exact exclusion in %d/%d trials (min 45), RMS < 0.2 px in %d of those", exact, kTrials, rms_ok)};
}

// 8. Drift speeds and the pixelation limit.
Outcome drift_profile_check() {
  double worst_speed = 0.0;
  for (int seed = 1; seed <= 10; ++seed) {
    SynthParams p = synth_preset("nb3cl8-like-27");
    p.seed = static_cast<std::uint64_t>(seed);
    const SynthResult syn = generate_stack(p);
    const RegistrationResult r = register_stack(syn.stack, RegistrationConfig{});
    const double v = p.drift.velocity.norm() / p.frame_time;
    const auto& vel = r.drift->velocities;
    for (std::size_t f = 1; f + 1 < vel.size(); ++f) worst_speed = std::max(worst_speed, std::abs(vel[f].norm() / v - 1.0));
  }

  // Noiseless stacks, pixel argmax only. The outlier threshold is raised
  // because quantisation errors add up along long transitivity paths.
  constexpr int kSeeds = 10;
  double sq = 0.0;
  int count = 0;
  int frames = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    SynthParams p = synth_preset("paper-like-40");
    p.seed = static_cast<std::uint64_t>(seed);
    p.dose.reset();
    frames = p.frame_count;
    const SynthResult syn = generate_stack(p);
    RegistrationConfig config;
    config.correlation.peak_mode = PeakMode::argmax;
    config.outlier_threshold = 8.0;
    const RegistrationResult r = register_stack(syn.stack, config);
    const CompareMetrics m = compare_positions(r.solution.shifts, syn.truth.positions, half_lattice(p));
    sq += m.rms * m.rms * m.compared / 2.0;
    count += m.compared;
  }
  const double per_axis = std::sqrt(sq / count);
  const double bound = 0.5 / std::sqrt(double(frames));
  return {worst_speed <= 0.05 && per_axis <= bound,
          fmt("worst interior speed error %.1f%% (limit 5%%); argmax per-axis RMS %.4f px (bound 0.5/sqrt(N) = %.4f)",
              100.0 * worst_speed, per_axis, bound)};
}

// 9. Reports are identical apart from timing.
Outcome determinism() {
  SynthParams p = synth_preset("nb3cl8-like-27");
  p.frame_count = 12;
  p.seed = 9;
  const SynthResult a = generate_stack(p, 1);
  const SynthResult b = generate_stack(p, 0);
  bool same_stack = a.stack.frames == b.stack.frames;
  RegistrationConfig c1, c2;
  c1.correlation.threads = 1;
  c2.correlation.threads = 0;
  auto ja = make_report(c1, register_stack(a.stack, c1), a.stack.metadata, "stack");
  auto jb = make_report(c2, register_stack(b.stack, c2), b.stack.metadata, "stack");
  ja.erase("timing");
  jb.erase("timing");
  const bool same = ja.dump() == jb.dump();
  return {same && same_stack, fmt("stacks %s, reports %s (threads 1 vs all)", same_stack ? "identical" : "differ",
                                  same ? "byte-identical without timing" : "differ")};
}

// 10. Spectral signature of a unit-cell hop. Half of the frames are averaged
//     one lattice vector off, perpendicular to the PLD wavevector. At
//     |k| = (m + 1/2)/a the two halves cancel along the hop, so the
//     spectrum along the PLD direction stands out against it.
Outcome artifact_demo() {
  constexpr int kSeeds = 8;
  const double a = 16.0;
  double log_ratio = 0.0;
  double worst_rise = 0.0;
  double min_ratio = INFINITY;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    SynthParams p = synth_preset("paper-like-40");
    p.seed = static_cast<std::uint64_t>(seed);
    p.a1 = {a, 0.0};
    p.a2 = {0.0, a};
    for (auto& atom : p.atoms) atom.sigma = 2.0;
    p.background = 0.0;
    p.dose = 1000.0;
    p.pld = {0.1, {1.0 / (4.0 * a), 0.0}, false};
    p.margin = 32;
    const SynthResult syn = generate_stack(p);

    ShiftSolution good;
    good.shifts = syn.truth.positions;
    Vec2 mean;
    for (const auto& v : good.shifts) mean += v;
    mean = mean / double(good.shifts.size());
    for (auto& v : good.shifts) v -= mean;
    ShiftSolution bad = good;
    for (std::size_t i = good.shifts.size() / 2; i < good.shifts.size(); ++i) bad.shifts[i] += p.a2;

    auto spectrum = [](const Image& avg) {
      const int m = 16;
      Image crop(avg.height() - 2 * m, avg.width() - 2 * m);
      for (int y = 0; y < crop.height(); ++y)
        for (int x = 0; x < crop.width(); ++x) crop(y, x) = avg(y + m, x + m);
      return power_spectrum(apply_window(crop, WindowKind::hann));
    };
    const Image sg = spectrum(average_stack(syn.stack, good).mean);
    const Image sb = spectrum(average_stack(syn.stack, bad).mean);

    const Vec2 along_pld{1.0, 0.0}, along_hop{0.0, 1.0};
    double seed_log = 0.0;
    for (int m = 1; m <= 2; ++m) {
      const double lo = (m + 0.4) / a, hi = (m + 0.6) / a, half_angle = 0.12;
      const double g = wedge_median(sg, along_pld, half_angle, lo, hi) - wedge_median(sg, along_hop, half_angle, lo, hi);
      const double b = wedge_median(sb, along_pld, half_angle, lo, hi) - wedge_median(sb, along_hop, half_angle, lo, hi);
      seed_log += (b - g) / 2.0;
    }
    log_ratio += seed_log / kSeeds;
    min_ratio = std::min(min_ratio, std::exp(seed_log));

    // Monotone within noise: 8-bin block means may not rise by more than 0.1.
    const auto profile = azimuthal_median_profile(sg);
    std::vector<double> blocks;
    for (std::size_t r = 0; r + 8 <= profile.size(); r += 8) {
      double s = 0.0;
      for (std::size_t q = 0; q < 8; ++q) s += profile[r + q];
      blocks.push_back(s / 8.0);
    }
    for (std::size_t r = 0; r + 1 < blocks.size(); ++r) worst_rise = std::max(worst_rise, blocks[r + 1] - blocks[r]);
  }
  const double ratio = std::exp(log_ratio);
  return {ratio >= 3.0 && worst_rise <= 0.1,
          fmt("PLD-direction excess %.2fx (geometric mean of %d seeds, min 3x; lowest seed %.2fx); correct profile "
              "largest block rise %.3f (tol 0.1)",
              ratio, kSeeds, min_ratio, worst_rise)};
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.insert(std::stoi(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only, known;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--only") only = parse_list(argv[i + 1]);
    else if (flag == "--known-failure") known = parse_list(argv[i + 1]);
  }

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"solver equivalence", solver_equivalence},   {"end-to-end recovery", end_to_end},
      {"outlier repair", outlier_repair},           {"subpixel-fit benefit", subpixel_benefit},
      {"mask regimes", mask_regimes},               {"SNR scaling", snr_scaling},
      {"frame exclusion", frame_exclusion},         {"drift profile", drift_profile_check},
      {"determinism", determinism},                 {"artifact demonstration", artifact_demo},
  };

  int unexpected = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int id = int(c) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[c].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const bool expected_fail = known.count(id) > 0;
    const char* tag = o.pass ? "PASS" : (expected_fail ? "FAIL (known)" : "FAIL");
    std::printf("criterion %2d %-12s %s: %s\n", id, tag, criteria[c].first, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass && !expected_fail) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
