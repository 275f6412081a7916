#include "helpers.hpp"

#include "stackreg/peaks.hpp"

using namespace stackreg;

namespace {

CorrelationSurface surface_of(Image img) { return CorrelationSurface{std::move(img)}; }

}  // namespace

TEST(LocalMaxima, SingleBump) {
  const auto s = surface_of(test::gaussian_image(21, 21, 7, 12, 2.0));
  const auto m = find_local_maxima(s, 5);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0], (PixelCoord{12, 7}));
}

TEST(LocalMaxima, OrderedByValue) {
  Image img = test::gaussian_image(32, 32, 8, 8, 1.5, 0.6);
  const Image bright = test::gaussian_image(32, 32, 22, 20, 1.5, 1.0);
  for (std::size_t i = 0; i < img.size(); ++i) img.values()[i] += bright.values()[i];
  const auto m = find_local_maxima(surface_of(img), 3);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0], (PixelCoord{20, 22}));
  EXPECT_EQ(m[1], (PixelCoord{8, 8}));
  EXPECT_EQ(find_local_maxima(surface_of(img), 1).size(), 1u);
}

TEST(LocalMaxima, PlateauYieldsFirstRasterPixel) {
  Image img(8, 8);
  img(3, 4) = img(3, 5) = img(4, 4) = img(4, 5) = 1.0;
  const auto m = find_local_maxima(surface_of(img), 10);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0], (PixelCoord{3, 4}));
}

TEST(LocalMaxima, BorderPixelsIgnored) {
  Image img(6, 6);
  img(0, 3) = 1.0;
  EXPECT_TRUE(find_local_maxima(surface_of(img), 2).empty());
  EXPECT_ERROR_CODE(find_local_maxima(surface_of(img), 11), ErrorCode::invalid_argument);
  EXPECT_ERROR_CODE(find_local_maxima(surface_of(img), 0), ErrorCode::invalid_argument);
}

TEST(GaussianFit, RecoversSubpixelCenter) {
  const Image img = test::gaussian_image(32, 32, 10.30, 20.70, 1.8, 2.0, 0.25);
  const auto fit = fit_gaussian(img, 21, 10);
  ASSERT_TRUE(fit.has_value());
  EXPECT_NEAR(fit->center_col, 10.30, 0.02);
  EXPECT_NEAR(fit->center_row, 20.70, 0.02);
  EXPECT_NEAR(fit->peak(), 2.25, 0.02);
}

TEST(GaussianFit, PixelCenteredPeakIsExact) {
  const Image img = test::gaussian_image(17, 17, 8, 8, 1.5);
  const auto fit = fit_gaussian(img, 8, 8);
  ASSERT_TRUE(fit.has_value());
  EXPECT_NEAR(fit->center_col, 8.0, 1e-6);
  EXPECT_NEAR(fit->center_row, 8.0, 1e-6);
}

TEST(GaussianFit, SubpixelShiftOfSurface) {
  // Centre at (+5, -3) relative to the surface centre (16, 16).
  const auto s = surface_of(test::gaussian_image(32, 32, 21.0, 13.0, 1.6));
  const auto p = locate_peak(s, PeakMode::gaussian_fit, 5);
  EXPECT_TRUE(p.refined);
  EXPECT_NEAR(p.x, 5.0, 1e-6);
  EXPECT_NEAR(p.y, -3.0, 1e-6);
  const auto a = locate_peak(s, PeakMode::argmax, 5);
  EXPECT_FALSE(a.refined);
  EXPECT_EQ(a.x, 5.0);
  EXPECT_EQ(a.y, -3.0);
}

TEST(GaussianFit, TranslationEquivariance) {
  for (double d : {0.0, 0.25, 0.5, 0.8}) {
    const auto s = surface_of(test::gaussian_image(40, 40, 18.4 + d, 22.1 - d, 2.0));
    const auto p = locate_peak(s, PeakMode::gaussian_fit, 3);
    EXPECT_NEAR(p.x, -1.6 + d, 0.02);
    EXPECT_NEAR(p.y, 2.1 - d, 0.02);
  }
}

TEST(GaussianFit, TallerFittedPeakWins) {
  // The half-pixel peak is taller but its brightest pixel is not.
  Image img = test::gaussian_image(48, 48, 12.0, 12.0, 1.5, 1.0);
  const Image off = test::gaussian_image(48, 48, 30.5, 30.5, 1.5, 1.05);
  for (std::size_t i = 0; i < img.size(); ++i) img.values()[i] += off.values()[i];
  const auto s = surface_of(img);
  const auto candidates = find_local_maxima(s, 5);
  ASSERT_GE(candidates.size(), 2u);
  EXPECT_EQ(candidates[0], (PixelCoord{12, 12}));
  const auto p = fit_subpixel(s, candidates);
  EXPECT_NEAR(p.x, 30.5 - 24.0, 0.01);
  EXPECT_NEAR(p.y, 30.5 - 24.0, 0.01);
  EXPECT_NEAR(p.score, 1.05, 0.01);
}

TEST(GaussianFit, FlatWindowFallsBackToArgmax) {
  Image img(16, 16, 1.0);
  img(5, 9) = 1.0 + 1e-3;
  const auto s = surface_of(img);
  const PixelCoord c{5, 9};
  const auto p = fit_subpixel(s, std::span<const PixelCoord>(&c, 1));
  // Either a converged fit close to the pixel or the argmax fallback.
  EXPECT_NEAR(p.x, 1.0, 0.5);
  EXPECT_NEAR(p.y, -3.0, 0.5);
}

TEST(Argmax, TiesPreferSmallestShift) {
  Image img(10, 10);
  img(5, 5) = 1.0;   // shift (0, 0)
  img(2, 8) = 1.0;   // shift (3, -3)
  const auto p = argmax_shift(surface_of(img));
  EXPECT_EQ(p.x, 0.0);
  EXPECT_EQ(p.y, 0.0);
}

TEST(PeakMode, Names) {
  EXPECT_EQ(parse_peak_mode("argmax"), PeakMode::argmax);
  EXPECT_EQ(parse_peak_mode(to_string(PeakMode::gaussian_fit)), PeakMode::gaussian_fit);
  EXPECT_ERROR_CODE(parse_peak_mode("centroid"), ErrorCode::invalid_argument);
}
