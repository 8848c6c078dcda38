#include "token_painter/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "token_painter/adae.hpp"
#include "token_painter/codec.hpp"
#include "token_painter/deif.hpp"
#include "token_painter/errors.hpp"
#include "token_painter/fft.hpp"
#include "token_painter/lattice.hpp"
#include "token_painter/pipeline.hpp"
#include "token_painter/rng.hpp"

namespace tp {

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << std::scientific << v;
  return ss.str();
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = rng.uniform(-1.0, 1.0);
  return m;
}

SuiteResult dft_suite(const SelftestOptions& opt) {
  double worst = 0.0;
  for (const int n : {4, 8, 16, 64, 77, 512}) {
    Rng rng(Rng::derive(1, static_cast<std::uint64_t>(n)));
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<fft::Complex> x(n);
      for (auto& v : x) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      auto fast = fft::forward(x);
      for (auto& v : fast) v += opt.fft_perturbation;
      const auto ref = fft::dft_oracle(x);
      for (int k = 0; k < n; ++k) worst = std::max(worst, std::abs(fast[k] - ref[k]));
    }
  }
  return {"dft_oracle", worst < 1e-9, "max |fft - dft| = " + fmt(worst)};
}

SuiteResult fusion_suite() {
  double worst = 0.0;
  for (const int L : {4, 8, 16, 64, 77, 512}) {
    Rng rng(Rng::derive(2, static_cast<std::uint64_t>(L)));
    const int trials = L == 77 ? 50 : 10;
    for (int t = 0; t < trials; ++t) {
      const Matrix gb = random_matrix(L, 32, rng), gt = random_matrix(L, 32, rng);
      for (const double c : {0.0, 0.5, 1.0}) {
        const std::vector<double> w(L, c);
        const auto fused = frequency_fuse(gb, gt, w);
        for (std::size_t i = 0; i < gb.size(); ++i) {
          const double expect = (1.0 - c) * gb.data()[i] + c * gt.data()[i];
          worst = std::max(worst, std::abs(fused.tokens.data()[i] - expect));
        }
      }
    }
  }
  return {"fusion_reductions", worst < 1e-9, "max deviation = " + fmt(worst)};
}

SuiteResult real_output_suite() {
  double worst = 0.0;
  for (const int L : {4, 8, 16, 64, 77, 512}) {
    Rng rng(Rng::derive(3, static_cast<std::uint64_t>(L)));
    for (const auto kind : {FusionKind::m_gaussian, FusionKind::linear, FusionKind::constant,
                            FusionKind::quadratic}) {
      const auto w = fusion_weights(L, kind, 0.49 * L, 6.0);
      const auto fused = frequency_fuse(random_matrix(L, 32, rng), random_matrix(L, 32, rng), w.w);
      worst = std::max(worst, fused.imag_residual);
    }
  }
  return {"real_output", worst < 1e-9, "max relative imaginary residual = " + fmt(worst)};
}

SuiteResult alignment_suite() {
  double worst = 0.0;
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const Matrix gb = random_matrix(77, 32, rng), gt = random_matrix(77, 32, rng);
    for (const auto mode : {AlignmentMode::corrected, AlignmentMode::as_written}) {
      const auto out = align_streams(gb, gt, 0.3, mode);
      const auto sb = channel_stats(out.gb), st = channel_stats(out.gt);
      for (std::size_t d = 0; d < 32; ++d) {
        worst = std::max({worst, std::abs(sb.mean[d] - st.mean[d]), std::abs(sb.stddev[d] - st.stddev[d])});
      }
    }
    const auto same = align_streams(gb, gb, 0.3, AlignmentMode::corrected);
    worst = std::max({worst, max_abs_diff(same.gb, gb), max_abs_diff(same.gt, gb)});
  }
  return {"alignment_stats", worst < 1e-9, "max stat mismatch = " + fmt(worst)};
}

SuiteResult alpha_beta_suite() {
  const double err = std::max({std::abs(compute_alpha(64, 64) - 1.0),
                               std::abs(compute_alpha(16, 64) - 1.5),
                               std::abs(compute_alpha(4, 64) - 3.0), std::abs(compute_beta(5, 4) - 1.0),
                               std::abs(compute_beta(9, 2) - 2.0), std::abs(compute_beta(8, 3) - 1.5)});
  return {"alpha_beta", err < 1e-12, "max identity error = " + fmt(err)};
}

SuiteResult selectivity_suite() {
  const int L = 16, hw = 77, slots = L + hw;
  Rng rng(6);
  bool ok = true;
  for (int t = 0; t < 20 && ok; ++t) {
    std::vector<int> cells(hw);
    for (int i = 0; i < hw; ++i) cells[i] = i;
    rng.shuffle(std::span<int>(cells));
    std::vector<int> inpaint(cells.begin(), cells.begin() + 20);
    std::ranges::sort(inpaint);
    std::vector<int> predicted(inpaint.begin(), inpaint.begin() + (t % 2 == 0 ? 0 : 7));
    std::vector<int> unknown(inpaint.begin() + static_cast<std::ptrdiff_t>(predicted.size()), inpaint.end());
    const auto spec = make_enhancement_spec(L, hw, inpaint, unknown, predicted, {}, StepZeroFactor::alpha_lambda2, t);

    const Matrix a = random_matrix(slots, slots, rng);
    Matrix g = a, p = a;
    enhance_guidance(g, spec);
    enhance_inpainting(p, spec);
    std::vector<std::uint8_t> row_hit(slots, 0), col_hit(slots, 0);
    for (const int r : spec.unknown_rows) row_hit[r] = 1;
    for (const int c : (spec.beta ? spec.predicted_cols : spec.inpaint_slots)) col_hit[c] = 1;
    for (int i = 0; i < slots; ++i) {
      for (int j = 0; j < slots; ++j) {
        const bool gt = row_hit[i] && j < L;
        const bool it = row_hit[i] && col_hit[j];
        ok &= gt ? g(i, j) == a(i, j) * spec.guidance_factor() : g(i, j) == a(i, j);
        ok &= it ? p(i, j) == a(i, j) * spec.inpaint_factor() : p(i, j) == a(i, j);
      }
    }
  }
  return {"enhancement_selectivity", ok, ok ? "20 matrices of 93x93" : "non-target entry changed"};
}

SuiteResult schedule_suite() {
  bool ok = true;
  int cases = 0;
  for (int n = 1; n <= 64 && ok; ++n) {
    std::vector<int> ip(n);
    for (int i = 0; i < n; ++i) ip[i] = 3 * i + 1;
    for (int k = 1; k <= std::min(8, n) && ok; ++k) {
      for (std::uint64_t seed = 0; seed < 10 && ok; ++seed) {
        const auto s = build_schedule(ip, k, seed, ScheduleKind::cosine);
        std::vector<int> all;
        for (const auto& set : s.sets) {
          ok &= !set.empty();
          all.insert(all.end(), set.begin(), set.end());
        }
        std::ranges::sort(all);
        ok &= all == ip && s.steps() == k;
        ++cases;
      }
    }
  }
  return {"schedule_partition", ok, std::to_string(cases) + " schedules checked"};
}

SuiteResult codec_suite() {
  double worst = 0.0;
  const Codec codec(8, 3, 192, 7);
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    Image img(32, 16, 3);
    for (auto& v : img.values) v = rng.uniform();
    const Image back = codec.decode(codec.encode(img));
    for (std::size_t i = 0; i < img.values.size(); ++i) worst = std::max(worst, std::abs(back.values[i] - img.values[i]));
  }
  return {"codec_roundtrip", worst < 1e-5, "max pixel error = " + fmt(worst)};
}

SuiteResult determinism_suite() {
  RunConfig cfg;
  const Image img = demo_image(64, 64, 3, 11);
  const PixelMask mask = demo_mask(64, 64, 20, 16, 44, 40);
  const Matrix text = prompt_tokens("a red bird", cfg.text_tokens, cfg.dim, cfg.seed);
  const auto a = inpaint(img, mask, text, cfg);
  const auto b = inpaint(img, mask, text, cfg);
  bool background_exact = true;
  for (const int i : a.plan.background) {
    background_exact &= std::ranges::equal(a.tokens.token(i), a.source_tokens.token(i));
  }
  const bool same = a.image == b.image && a.tokens == b.tokens;
  return {"determinism", same && background_exact,
          std::string(same ? "identical reruns" : "reruns differ") +
              (background_exact ? ", background tokens untouched" : ", background modified")};
}

}  // namespace

std::vector<SuiteResult> run_selftest(const SelftestOptions& options) {
  const std::vector<std::function<SuiteResult()>> suites = {
      [&] { return dft_suite(options); }, fusion_suite,     real_output_suite,
      alignment_suite,                    alpha_beta_suite, selectivity_suite,
      schedule_suite,                     codec_suite,      determinism_suite,
  };
  std::vector<SuiteResult> results;
  for (const auto& suite : suites) {
    try {
      results.push_back(suite());
    } catch (const std::exception& e) {
      results.push_back({"<suite>", false, e.what()});
    }
  }
  return results;
}

}  // namespace tp
