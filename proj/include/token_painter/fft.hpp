#pragma once

#include <complex>
#include <span>
#include <vector>

namespace tp::fft {

using Complex = std::complex<double>;

// Forward DFT, X[k] = sum_n x[n] exp(-2 pi i k n / N), for any N >= 1.
// Powers of two use an iterative radix-2 kernel; other lengths go through
// Bluestein's chirp-z reformulation on a padded power-of-two convolution.
std::vector<Complex> forward(std::span<const Complex> x);

// Inverse including the 1/N normalization.
std::vector<Complex> inverse(std::span<const Complex> x);

// Direct O(N^2) evaluation of the definition. Reference for the fast path.
std::vector<Complex> dft_oracle(std::span<const Complex> x);

// Moves bin 0 to index N/2 (floor), matching numpy.fft.fftshift.
std::vector<Complex> shift(std::span<const Complex> x);
// Exact inverse of shift().
std::vector<Complex> unshift(std::span<const Complex> x);

}  // namespace tp::fft
