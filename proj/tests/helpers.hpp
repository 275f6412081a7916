#pragma once

#include "stackreg/error.hpp"
#include "stackreg/grid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

namespace stackreg::test {

inline Image gaussian_image(int h, int w, double cx, double cy, double sigma, double amp = 1.0, double offset = 0.0) {
  Image img(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - cx, dy = y - cy;
      img(y, x) = offset + amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  }
  return img;
}

// Band-limited image that is exactly periodic on an h x w grid.
inline Image periodic_image(int h, int w, double dx = 0.0, double dy = 0.0) {
  Image img(h, w);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = (x - dx) / w, v = (y - dy) / h;
      img(y, x) = std::cos(two_pi * 3 * u) + 0.7 * std::sin(two_pi * (2 * u + 5 * v)) +
                  0.4 * std::cos(two_pi * (7 * v - u) + 0.3) + 0.2 * std::sin(two_pi * 11 * u);
    }
  }
  return img;
}

inline Image noise_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Image img(h, w);
  for (auto& v : img.values()) v = n(rng);
  return img;
}

// Circular integer shift: out(y, x) = in(y - sy, x - sx).
inline Image roll(const Image& in, int sx, int sy) {
  Image out(in.height(), in.width());
  const int h = in.height(), w = in.width();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(((y + sy) % h + h) % h, ((x + sx) % w + w) % w) = in(y, x);
  return out;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = std::filesystem::temp_directory_path() /
            ("stackreg_test_" + std::string(info ? info->name() : "x") + "_" + std::to_string(++counter));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace stackreg::test

#define EXPECT_ERROR_CODE(stmt, expected)                                   \
  do {                                                                      \
    try {                                                                   \
      stmt;                                                                 \
      ADD_FAILURE() << "expected stackreg::Error";                          \
    } catch (const ::stackreg::Error& e) {                                  \
      EXPECT_EQ(e.code(), (expected)) << e.what();                          \
    }                                                                       \
  } while (0)
