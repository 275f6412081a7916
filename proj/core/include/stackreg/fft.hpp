#pragma once

#include "stackreg/grid.hpp"

namespace stackreg::fft {

/// Unnormalized forward 2D DFT.
ComplexImage forward(const Image& image);
ComplexImage forward(const ComplexImage& image);

/// Inverse 2D DFT scaled by 1/(height*width), so inverse(forward(x)) == x.
ComplexImage inverse(const ComplexImage& spectrum);

/// Inverse transform of a spectrum expected to be Hermitian. Returns the real
/// part and writes max|imag| / max|real| into `imag_ratio` when non-null.
Image inverse_real(const ComplexImage& spectrum, double* imag_ratio = nullptr);

}  // namespace stackreg::fft
