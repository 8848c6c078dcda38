#include <algorithm>
#include <cmath>
#include <complex>

#include "doctest.h"
#include "oracles.hpp"
#include "token_painter/deif.hpp"
#include "token_painter/errors.hpp"
#include "token_painter/fft.hpp"
#include "token_painter/rng.hpp"

using namespace tp;
using tp::test::cld;

namespace {

std::vector<fft::Complex> random_signal(std::size_t n, Rng& rng) {
  std::vector<fft::Complex> x(n);
  for (auto& v : x) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  return x;
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0, double offset = 0.0) {
  Matrix m(r, c);
  for (auto& v : m.data()) v = offset + scale * rng.uniform(-1, 1);
  return m;
}

}  // namespace

TEST_CASE("fft matches an extended-precision DFT") {
  Rng rng(10);
  for (const std::size_t n : {1u, 2u, 3u, 4u, 5u, 8u, 16u, 31u, 64u, 77u, 100u, 512u}) {
    for (int t = 0; t < 5; ++t) {
      const auto x = random_signal(n, rng);
      const auto fast = fft::forward(x);
      const auto ref = test::long_dft(x);
      const auto direct = fft::dft_oracle(x);
      double worst = 0, worst_direct = 0;
      for (std::size_t k = 0; k < n; ++k) {
        worst = std::max(worst, static_cast<double>(std::abs(cld(fast[k].real(), fast[k].imag()) - ref[k])));
        worst_direct =
            std::max(worst_direct, static_cast<double>(std::abs(cld(direct[k].real(), direct[k].imag()) - ref[k])));
      }
      CHECK(worst < 1e-9);
      CHECK(worst_direct < 1e-9);
      const auto back = fft::inverse(fast);
      for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(back[k] - x[k]) < 1e-12);
    }
  }
}

TEST_CASE("shift follows the fftshift convention") {
  std::vector<fft::Complex> even{0, 1, 2, 3}, odd{0, 1, 2, 3, 4};
  const auto se = fft::shift(even), so = fft::shift(odd);
  CHECK(se == std::vector<fft::Complex>{2, 3, 0, 1});
  CHECK(so == std::vector<fft::Complex>{3, 4, 0, 1, 2});
  CHECK(fft::unshift(se) == even);
  CHECK(fft::unshift(so) == odd);
}

TEST_CASE("channel stats are population statistics") {
  Matrix m(4, 2);
  const double col0[] = {1, 2, 3, 4}, col1[] = {5, 5, 5, 5};
  for (int l = 0; l < 4; ++l) {
    m(l, 0) = col0[l];
    m(l, 1) = col1[l];
  }
  const auto s = channel_stats(m);
  CHECK(s.mean[0] == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(s.stddev[0] == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
  CHECK(s.mean[1] == 5.0);
  CHECK(s.stddev[1] == 0.0);
}

TEST_CASE("alignment matches channel statistics") {
  Rng rng(11);
  for (const auto mode : {AlignmentMode::corrected, AlignmentMode::as_written}) {
    for (int t = 0; t < 20; ++t) {
      const auto gb = random_matrix(16, 32, rng, 2.0, 0.5);
      const auto gt = random_matrix(16, 32, rng, 0.5, -1.0);
      const double a = rng.uniform();
      const auto al = align_streams(gb, gt, a, mode);
      const auto sb = channel_stats(al.gb), st = channel_stats(al.gt);
      const auto b0 = channel_stats(gb), t0 = channel_stats(gt);
      for (int d = 0; d < 32; ++d) {
        const double mean_mix = a * b0.mean[d] + (1 - a) * t0.mean[d];
        const double std_mix = a * b0.stddev[d] + (1 - a) * t0.stddev[d];
        CHECK(std::abs(sb.mean[d] - st.mean[d]) < 1e-9);
        CHECK(std::abs(sb.stddev[d] - st.stddev[d]) < 1e-9);
        if (mode == AlignmentMode::corrected) {
          CHECK(std::abs(sb.mean[d] - mean_mix) < 1e-9);
          CHECK(std::abs(sb.stddev[d] - std_mix) < 1e-9);
        } else {
          CHECK(std::abs(sb.mean[d] - std_mix) < 1e-9);
          CHECK(std::abs(sb.stddev[d] - std::abs(mean_mix)) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("corrected alignment of equal streams is the identity") {
  Rng rng(12);
  const auto g = random_matrix(16, 8, rng);
  for (const double a : {0.0, 0.3, 1.0}) {
    const auto al = align_streams(g, g, a, AlignmentMode::corrected);
    CHECK(max_abs_diff(al.gb, g) < 1e-12);
    CHECK(max_abs_diff(al.gt, g) < 1e-12);
  }
  CHECK_THROWS_AS(align_streams(g, g, 1.5, AlignmentMode::corrected), ConfigError);
}

TEST_CASE("constant channels do not divide by zero") {
  Matrix flat(8, 2, 3.0), other(8, 2);
  for (int l = 0; l < 8; ++l) other(l, 0) = other(l, 1) = l;
  const auto al = align_streams(flat, other, 0.5, AlignmentMode::corrected);
  for (const double v : al.gb.data()) CHECK(std::isfinite(v));
  for (const double v : al.gt.data()) CHECK(std::isfinite(v));
}

TEST_CASE("fusion weight profiles") {
  const auto w = fusion_weights(512, FusionKind::m_gaussian, 250.0, 6.0);
  CHECK(w.w[256] == 1.0);
  CHECK(std::abs(w.w[0] - 0.315713063561016784030742163824263058279) < 1e-12);
  for (int l = 1; l < 512; ++l) CHECK(w.w[l] == w.w[512 - l]);
  for (int l = 1; l <= 256; ++l) CHECK(w.w[l] >= w.w[l - 1]);

  for (const auto kind : {FusionKind::m_gaussian, FusionKind::linear, FusionKind::constant, FusionKind::quadratic}) {
    for (const int L : {4, 8, 16, 64, 77, 512}) {
      const auto f = fusion_weights(L, kind, 0.49 * L, 6.0);
      REQUIRE(static_cast<int>(f.w.size()) == L);
      CHECK(f.w[L / 2] == 1.0);
      for (const double v : f.w) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      if (L % 2 == 0) {
        for (int l = 1; l < L; ++l) CHECK(f.w[l] == f.w[L - l]);
      } else {
        for (int l = 0; l < L; ++l) CHECK(f.w[l] == f.w[L - 1 - l]);
      }
    }
  }
  const auto lin = fusion_weights(8, FusionKind::linear, 1, 1);
  CHECK(lin.w == std::vector<double>{0, 0.25, 0.5, 0.75, 1, 0.75, 0.5, 0.25});
  const auto con = fusion_weights(8, FusionKind::constant, 1, 1);
  CHECK(con.w == std::vector<double>{0, 0, 0, 1, 1, 1, 0, 0});
  const auto quad = fusion_weights(8, FusionKind::quadratic, 1, 1);
  CHECK(quad.w[2] == doctest::Approx(0.75));
  CHECK_THROWS_AS(fusion_weights(1, FusionKind::linear, 1, 1), ConfigError);
  CHECK_THROWS_AS(fusion_weights(16, FusionKind::m_gaussian, 0, 6), ConfigError);
  CHECK(parse_fusion_kind("m-gaussian") == FusionKind::m_gaussian);
  CHECK_THROWS_AS(parse_fusion_kind("cubic"), ConfigError);
}

TEST_CASE("fusion reductions") {
  Rng rng(13);
  for (const int L : {4, 8, 16, 64, 77, 512}) {
    for (int t = 0; t < 5; ++t) {
      const auto gb = random_matrix(L, 32, rng), gt = random_matrix(L, 32, rng);
      const auto one = frequency_fuse(gb, gt, std::vector<double>(L, 1.0));
      const auto zero = frequency_fuse(gb, gt, std::vector<double>(L, 0.0));
      const auto half = frequency_fuse(gb, gt, std::vector<double>(L, 0.5));
      CHECK(max_abs_diff(one.tokens, gt) < 1e-9);
      CHECK(max_abs_diff(zero.tokens, gb) < 1e-9);
      Matrix mean(L, 32);
      for (std::size_t i = 0; i < mean.size(); ++i) mean.data()[i] = 0.5 * (gb.data()[i] + gt.data()[i]);
      CHECK(max_abs_diff(half.tokens, mean) < 1e-9);
      for (const auto kind : {FusionKind::m_gaussian, FusionKind::linear, FusionKind::constant, FusionKind::quadratic}) {
        const auto fw = fusion_weights(L, kind, 0.49 * L, 6.0);
        CHECK(frequency_fuse(gb, gt, fw.w).imag_residual < 1e-9);
      }
    }
  }
}

TEST_CASE("fusion is symmetric under swapping streams and weights") {
  Rng rng(14);
  const auto gb = random_matrix(16, 4, rng), gt = random_matrix(16, 4, rng);
  const auto fw = fusion_weights(16, FusionKind::m_gaussian, 7.84, 6.0);
  std::vector<double> inv(16);
  for (int l = 0; l < 16; ++l) inv[l] = 1.0 - fw.w[l];
  CHECK(max_abs_diff(frequency_fuse(gb, gt, fw.w).tokens, frequency_fuse(gt, gb, inv).tokens) < 1e-12);
  CHECK_THROWS_AS(frequency_fuse(gb, random_matrix(8, 4, rng), fw.w), DimensionError);
}
