#include "stackreg/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace stackreg::fft {
namespace {

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per (shape, direction) and never freed.
class PlanCache {
 public:
  fftw_plan get(int height, int width, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(height, width, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<std::complex<double>> scratch(static_cast<std::size_t>(height) * width);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(height, width, buf, buf, sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void execute_in_place(ComplexImage& data, int sign) {
  fftw_plan plan = cache().get(data.height(), data.width(), sign);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buf, buf);
}

}  // namespace

ComplexImage forward(const Image& image) {
  ComplexImage out(image.height(), image.width());
  std::copy(image.values().begin(), image.values().end(), out.values().begin());
  execute_in_place(out, FFTW_FORWARD);
  return out;
}

ComplexImage forward(const ComplexImage& image) {
  ComplexImage out = image;
  execute_in_place(out, FFTW_FORWARD);
  return out;
}

ComplexImage inverse(const ComplexImage& spectrum) {
  ComplexImage out = spectrum;
  execute_in_place(out, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(out.size());
  for (auto& v : out.values()) v *= scale;
  return out;
}

Image inverse_real(const ComplexImage& spectrum, double* imag_ratio) {
  const ComplexImage full = inverse(spectrum);
  Image out(full.height(), full.width());
  double max_real = 0.0;
  double max_imag = 0.0;
  auto src = full.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = src[i].real();
    max_real = std::max(max_real, std::abs(src[i].real()));
    max_imag = std::max(max_imag, std::abs(src[i].imag()));
  }
  if (imag_ratio != nullptr) {
    *imag_ratio = max_real > 0.0 ? max_imag / max_real : (max_imag > 0.0 ? INFINITY : 0.0);
  }
  return out;
}

}  // namespace stackreg::fft
