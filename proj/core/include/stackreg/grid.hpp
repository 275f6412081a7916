#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace stackreg {

/// Dense row-major 2D array. Row index is y, column index is x.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T value = T{})
      : height_(height), width_(width),
        data_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), value) {}

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool same_shape(const Grid& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }
  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return height_ == other.height() && width_ == other.width();
  }

  T& operator()(int y, int x) noexcept { return data_[index(y, x)]; }
  const T& operator()(int y, int x) const noexcept { return data_[index(y, x)]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  std::span<T> row(int y) noexcept {
    return std::span<T>(data_).subspan(index(y, 0), static_cast<std::size_t>(width_));
  }
  std::span<const T> row(int y) const noexcept {
    return std::span<const T>(data_).subspan(index(y, 0), static_cast<std::size_t>(width_));
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t index(int y, int x) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

using Image = Grid<double>;
using ComplexImage = Grid<std::complex<double>>;
/// Per-pixel validity; nonzero means valid.
using Mask = Grid<std::uint8_t>;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
};

/// Signed frequency (cycles/px) of FFT bin `index` along an axis of length n.
inline double fft_frequency(int index, int n) {
  const int signed_index = index < (n + 1) / 2 ? index : index - n;
  return static_cast<double>(signed_index) / static_cast<double>(n);
}

/// Moves the zero-frequency / zero-shift element from (0, 0) to (h/2, w/2).
template <typename T>
Grid<T> fftshift(const Grid<T>& in) {
  Grid<T> out(in.height(), in.width());
  const int h = in.height();
  const int w = in.width();
  for (int y = 0; y < h; ++y) {
    const int ty = (y + h / 2) % h;
    for (int x = 0; x < w; ++x) {
      out(ty, (x + w / 2) % w) = in(y, x);
    }
  }
  return out;
}

/// Inverse of fftshift for both even and odd sizes.
template <typename T>
Grid<T> ifftshift(const Grid<T>& in) {
  Grid<T> out(in.height(), in.width());
  const int h = in.height();
  const int w = in.width();
  for (int y = 0; y < h; ++y) {
    const int sy = (y + h / 2) % h;
    for (int x = 0; x < w; ++x) {
      out(y, x) = in(sy, (x + w / 2) % w);
    }
  }
  return out;
}

/// Circular roll: out(y + dy, x + dx) = in(y, x).
template <typename T>
Grid<T> roll(const Grid<T>& in, int dy, int dx) {
  Grid<T> out(in.height(), in.width());
  const int h = in.height();
  const int w = in.width();
  for (int y = 0; y < h; ++y) {
    const int ty = ((y + dy) % h + h) % h;
    for (int x = 0; x < w; ++x) {
      out(ty, ((x + dx) % w + w) % w) = in(y, x);
    }
  }
  return out;
}

}  // namespace stackreg
