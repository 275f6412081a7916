#include "helpers.hpp"

#include "stackreg/paths.hpp"
#include "stackreg/reconstruct.hpp"
#include "stackreg/shift_matrix.hpp"

#include <Eigen/Dense>

using namespace stackreg;

namespace {

std::vector<Vec2> drift(int n, Vec2 v, Vec2 start = {}) {
  std::vector<Vec2> p;
  for (int i = 0; i < n; ++i) p.push_back(start + static_cast<double>(i) * v);
  return p;
}

ShiftMatrix noisy(const std::vector<Vec2>& p, double sigma, std::uint64_t seed) {
  ShiftMatrix m = ShiftMatrix::from_positions(p);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  for (int i = 0; i < m.size(); ++i)
    for (int j = i + 1; j < m.size(); ++j) m.set(i, j, m.at(i, j) + Vec2{g(rng), g(rng)});
  return m;
}

int count_invalid_pairs(const Mask& m) {
  int c = 0;
  for (int i = 0; i < m.height(); ++i)
    for (int j = i + 1; j < m.width(); ++j) c += m(i, j) ? 0 : 1;
  return c;
}

}  // namespace

TEST(ShiftMatrix, SkewSymmetric) {
  ShiftMatrix m(4);
  m.set(1, 3, {2.5, -1.0});
  EXPECT_EQ(m.at(3, 1), (Vec2{-2.5, 1.0}));
  EXPECT_EQ(m.at(2, 2), (Vec2{0.0, 0.0}));
  m.set_valid(0, 2, false);
  EXPECT_FALSE(m.valid(2, 0));
}

TEST(ShiftMatrix, IdealMatrixIsTransitive) {
  const auto m = ShiftMatrix::from_positions(drift(8, {0.7, -0.3}, {1, 2}));
  const auto paths = select_paths(1, 6, 8, 5);
  const auto e = transitivity_error(m, 1, 6, paths);
  ASSERT_TRUE(e.has_value());
  EXPECT_NEAR(*e, 0.0, 1e-12);
  EXPECT_EQ(count_invalid_pairs(detect_outliers(m, OutlierMethod::transitivity, 0.5)), 0);
}

TEST(ShiftMatrix, LatticeHopIsFlagged) {
  const Vec2 a{8.0, 0.0};
  const auto p = drift(10, {0.5, 0.2});
  ShiftMatrix m = ShiftMatrix::from_positions(p);
  m.set(2, 7, m.at(2, 7) + a);
  const auto paths = select_paths(2, 7, 10, 5);
  EXPECT_NEAR(*transitivity_error(m, 2, 7, paths), a.norm(), 1e-12);

  const Mask v = detect_outliers(m, OutlierMethod::transitivity, 2.0);
  EXPECT_EQ(count_invalid_pairs(v), 1);
  EXPECT_FALSE(v(2, 7));
  EXPECT_FALSE(v(7, 2));

  const auto repaired = repair_outliers(m, v);
  const Vec2 d = repaired.at(2, 7) - (p[7] - p[2]);
  EXPECT_LT(d.norm(), 1e-9);
  EXPECT_TRUE(repaired.valid(2, 7));
}

TEST(ShiftMatrix, ScatteredHopsAllFlagged) {
  const auto p = drift(15, {0.4, 0.3});
  ShiftMatrix m = noisy(p, 0.1, 3);
  const std::vector<std::pair<int, int>> bad{{0, 5}, {3, 4}, {6, 13}, {9, 10}, {11, 14}};
  for (auto [i, j] : bad) m.set(i, j, m.at(i, j) + Vec2{0.0, -8.0});
  for (auto method : {OutlierMethod::transitivity, OutlierMethod::neighbor}) {
    const Mask v = detect_outliers(m, method, 2.0);
    for (auto [i, j] : bad) EXPECT_FALSE(v(i, j)) << to_string(method) << " " << i << "," << j;
    if (method == OutlierMethod::transitivity) {
      EXPECT_EQ(count_invalid_pairs(v), 5);
    }
  }
  const Mask v = detect_outliers(m, OutlierMethod::transitivity, 2.0);
  const auto repaired = repair_outliers(m, v);
  for (auto [i, j] : bad) EXPECT_LT((repaired.at(i, j) - (p[j] - p[i])).norm(), 0.3);
}

TEST(ShiftMatrix, BackgroundFitFlagsHop) {
  // Smooth quadratic drift fits the polynomial surface exactly.
  std::vector<Vec2> p;
  for (int i = 0; i < 12; ++i) p.push_back({0.05 * i * i, -0.3 * i});
  ShiftMatrix m = ShiftMatrix::from_positions(p);
  m.set(4, 9, m.at(4, 9) + Vec2{8.0, 0.0});
  OutlierOptions o;
  o.polynomial_order = 3;
  const Mask v = detect_outliers(m, OutlierMethod::background_fit, 2.0, o);
  EXPECT_FALSE(v(4, 9));
  EXPECT_LE(count_invalid_pairs(v), 3);
}

TEST(ShiftMatrix, BadRowExcluded) {
  const int n = 10;
  Mask v(n, n, 1);
  for (int j = 0; j < n; ++j)
    if (j != 4 && j < 8) v(4, j) = v(j, 4) = 0;  // 7 of 9 invalid
  v(1, 2) = v(2, 1) = 0;
  EXPECT_EQ(exclude_bad_frames(v, 0.5), (std::vector<int>{4}));
  EXPECT_ERROR_CODE(exclude_bad_frames(Mask(3, 3, 0), 0.5), ErrorCode::registration_failed);
}

TEST(ShiftMatrix, UnrepairableElement) {
  ShiftMatrix m = ShiftMatrix::from_positions(drift(3, {1, 0}));
  Mask v(3, 3, 1);
  v(0, 1) = v(1, 0) = 0;
  v(1, 2) = v(2, 1) = 0;
  EXPECT_ERROR_CODE(repair_outliers(m, v), ErrorCode::unrepairable_element);
}

TEST(ShiftMatrix, SolverMatchesLeastSquares) {
  const int n = 9;
  const auto p = drift(n, {0.3, 0.1}, {2.0, -1.0});
  const ShiftMatrix m = noisy(p, 0.2, 11);
  const auto sol = optimal_shifts(m);

  // min sum_{i<j} |R_ij - (r_j - r_i)|^2 with sum r = 0, per axis.
  const int rows = n * (n - 1) / 2 + 1;
  for (int axis = 0; axis < 2; ++axis) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
    int r = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++r) {
        A(r, j) = 1.0;
        A(r, i) = -1.0;
        b(r) = axis == 0 ? m.at(i, j).x : m.at(i, j).y;
      }
    A.row(r).setOnes();
    const Eigen::VectorXd x = A.colPivHouseholderQr().solve(b);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(axis == 0 ? sol.shifts[i].x : sol.shifts[i].y, x(i), 1e-10);
  }
}

TEST(ShiftMatrix, SolverRecoversCenteredPositions) {
  const auto p = drift(6, {1.0, 0.5}, {3.0, 3.0});
  auto sol = optimal_shifts(ShiftMatrix::from_positions(p), std::vector<int>{5});
  // Frames 0..4: mean position (5, 4).
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(sol.shifts[i].x, p[i].x - 5.0, 1e-12);
    EXPECT_NEAR(sol.shifts[i].y, p[i].y - 4.0, 1e-12);
  }
  EXPECT_EQ(sol.shifts[5], (Vec2{}));
  EXPECT_FALSE(sol.included(5));
}

TEST(ShiftMatrix, SolverRejectsInvalidElements) {
  ShiftMatrix m = ShiftMatrix::from_positions(drift(4, {1, 0}));
  m.set_valid(0, 3, false);
  EXPECT_ERROR_CODE(optimal_shifts(m), ErrorCode::invalid_argument);
  EXPECT_NO_THROW(optimal_shifts(m, std::vector<int>{3}));
}

TEST(ShiftMatrix, DriftProfileOfLinearDrift) {
  ShiftSolution sol;
  sol.shifts = drift(8, {0.5, -0.25});
  StackMetadata meta;
  meta.frame_count = 8;
  meta.frame_time = 2.0;
  meta.pixel_size = 0.1;
  const auto d = drift_profile(sol, meta);
  EXPECT_EQ(d.unit, "angstrom");
  ASSERT_EQ(d.velocities.size(), 8u);
  for (int i = 0; i < 8; ++i) {
    EXPECT_NEAR(d.smoothed[i].x, d.positions[i].x, 1e-12);
    EXPECT_NEAR(d.velocities[i].x, 0.5 * 0.1 / 2.0, 1e-12);
    EXPECT_NEAR(d.velocities[i].y, -0.25 * 0.1 / 2.0, 1e-12);
  }
}

TEST(ShiftMatrix, MeasuresKnownShifts) {
  Image scene(64, 64);
  const double centers[][2] = {{20, 22}, {40, 30}, {30, 45}, {25, 35}, {44, 18}};
  for (auto [cx, cy] : centers) {
    const Image blob = test::gaussian_image(64, 64, cx, cy, 2.5);
    for (std::size_t k = 0; k < scene.size(); ++k) scene.values()[k] += blob.values()[k];
  }
  const std::vector<Vec2> p{{0, 0}, {1.25, -0.5}, {2.5, -1.0}, {3.75, -1.5}};
  std::vector<Image> frames;
  for (auto s : p) frames.push_back(shift_frame(scene, s).image);
  const auto stack = make_stack(frames, 1.0);
  CorrelationSettings settings;
  settings.threads = 2;
  const auto m = compute_shift_matrix(stack, settings);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      EXPECT_TRUE(m.valid(i, j));
      EXPECT_TRUE(m.refined(i, j));
      EXPECT_LT((m.at(i, j) - (p[j] - p[i])).norm(), 0.15) << i << "," << j;
    }
}
