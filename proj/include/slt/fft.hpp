#pragma once

#include <complex>
#include <span>

namespace slt {

/// In-place unnormalized DFT on a row-major M^d array (d = 1 or 2).
/// Plans are cached per shape behind a mutex; execution is reentrant.
void fft_forward(std::span<std::complex<double>> data, int dimension, int points);
void fft_backward(std::span<std::complex<double>> data, int dimension, int points);

}  // namespace slt
