#include "token_painter/fft.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace tp::fft {

namespace {

// Exact twiddle exp(sign * 2 pi i * num / den), with num reduced mod den so
// large chirp exponents keep full precision.
Complex twiddle(std::uint64_t num, std::uint64_t den, double sign) {
  const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(num % den) /
                       static_cast<double>(den);
  return {std::cos(angle), std::sin(angle)};
}

void radix2(std::vector<Complex>& a, bool invert) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = invert ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    std::vector<Complex> w(half);
    for (std::size_t k = 0; k < half; ++k) w[k] = twiddle(k, len, sign);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex u = a[i + k];
        const Complex v = a[i + k + half] * w[k];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

// Chirp-z: X[k] = conj(c[k]) * sum_n (x[n] conj(c[n])) c[k - n], with
// c[m] = exp(i pi m^2 / N), evaluated as a circular convolution of length
// M >= 2N - 1.
std::vector<Complex> bluestein(std::span<const Complex> x) {
  const std::size_t n = x.size();
  const std::size_t m = std::bit_ceil(2 * n - 1);
  std::vector<Complex> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    // exp(i pi k^2 / n) = exp(2 pi i * k^2 / (2n))
    chirp[k] = twiddle(static_cast<std::uint64_t>(k) * k, 2 * n, 1.0);
  }
  std::vector<Complex> a(m), b(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * std::conj(chirp[k]);
  b[0] = chirp[0];
  for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = chirp[k];
  radix2(a, false);
  radix2(b, false);
  for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
  radix2(a, true);
  std::vector<Complex> out(n);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * scale * std::conj(chirp[k]);
  return out;
}

}  // namespace

std::vector<Complex> forward(std::span<const Complex> x) {
  if (x.empty()) return {};
  if (std::has_single_bit(x.size())) {
    std::vector<Complex> a(x.begin(), x.end());
    radix2(a, false);
    return a;
  }
  return bluestein(x);
}

std::vector<Complex> inverse(std::span<const Complex> x) {
  // IDFT(x) = conj(DFT(conj(x))) / N
  std::vector<Complex> c(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) c[i] = std::conj(x[i]);
  auto out = forward(c);
  const double scale = 1.0 / static_cast<double>(x.size());
  for (auto& v : out) v = std::conj(v) * scale;
  return out;
}

std::vector<Complex> dft_oracle(std::span<const Complex> x) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex sum{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      sum += x[j] * twiddle(static_cast<std::uint64_t>(k) * j, n, -1.0);
    }
    out[k] = sum;
  }
  return out;
}

std::vector<Complex> shift(std::span<const Complex> x) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) out[(k + n / 2) % n] = x[k];
  return out;
}

std::vector<Complex> unshift(std::span<const Complex> x) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = x[(k + n / 2) % n];
  return out;
}

}  // namespace tp::fft
