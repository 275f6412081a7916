#include "stackreg/shift_matrix.hpp"
#include "stackreg/spectral.hpp"
#include "stackreg/synth.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace stackreg;

namespace {

Image noise(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Image img(n, n);
  for (auto& v : img.values()) v = g(rng);
  return img;
}

SynthParams bench_params(int frames) {
  SynthParams p = synth_preset("paper-like-40");
  p.height = p.width = 128;
  p.frame_count = frames;
  p.margin = 64;
  return p;
}

}  // namespace

static void BM_Correlate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image a = noise(n, 1), b = noise(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(correlate(a, b, CorrelationMethod::cross));
}
BENCHMARK(BM_Correlate)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_ShiftMatrix(benchmark::State& state) {
  const auto synth = generate_stack(bench_params(static_cast<int>(state.range(0))));
  CorrelationSettings settings;
  for (auto _ : state) benchmark::DoNotOptimize(compute_shift_matrix(synth.stack, settings));
}
BENCHMARK(BM_ShiftMatrix)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond)->UseRealTime();

static void BM_DetectOutliers(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<Vec2> p;
  for (int i = 0; i < n; ++i) p.push_back({0.4 * i, -0.2 * i});
  ShiftMatrix m = ShiftMatrix::from_positions(p);
  m.set(1, n - 2, m.at(1, n - 2) + Vec2{8.0, 0.0});
  for (auto _ : state) benchmark::DoNotOptimize(detect_outliers(m, OutlierMethod::transitivity, 2.0));
}
BENCHMARK(BM_DetectOutliers)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
