#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "token_painter/errors.hpp"
#include "token_painter/pipeline.hpp"
#include "token_painter/rng.hpp"

using namespace tp;

namespace {

struct Scene {
  Image image = demo_image(64, 64, 3, 4);
  PixelMask mask = demo_mask(64, 64, 16, 16, 48, 48);
};

RunConfig smoke(Mode mode) {
  RunConfig cfg;
  cfg.mode = mode;
  return cfg;
}

InpaintResult run(const Scene& s, const RunConfig& cfg) {
  return inpaint(s.image, s.mask, prompt_tokens("a red kite", cfg.text_tokens, cfg.dim, cfg.seed), cfg);
}

}  // namespace

TEST_CASE("prompt tokens are keyed by text and seed") {
  const auto a = prompt_tokens("cat", 16, 32, 0);
  CHECK(a.rows() == 16u);
  CHECK(a.cols() == 32u);
  CHECK(a == prompt_tokens("cat", 16, 32, 0));
  CHECK_FALSE(a == prompt_tokens("dog", 16, 32, 0));
  CHECK_FALSE(a == prompt_tokens("cat", 16, 32, 1));
  for (const double v : a.data()) CHECK(std::abs(v) <= 1.0);
}

TEST_CASE("background tokens survive every mode") {
  const Scene s;
  for (const auto mode : {Mode::tb_baseline, Mode::t_only, Mode::deif_only, Mode::token_painter}) {
    CAPTURE(to_string(mode));
    const auto r = run(s, smoke(mode));
    CHECK(r.plan.inpaint.size() == 16u);
    for (const int b : r.plan.background) {
      const auto x = r.source_tokens.token(b), y = r.tokens.token(b);
      CHECK(std::ranges::equal(x, y));
    }
    REQUIRE(r.report.background_psnr.has_value());
    CHECK(std::isinf(*r.report.background_psnr));
    double worst = 0;
    for (const int b : r.plan.background) {
      const int h = b / 8, w = b % 8;
      for (int y = 8 * h; y < 8 * h + 8; ++y)
        for (int x = 8 * w; x < 8 * w + 8; ++x)
          for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(r.image.at(x, y, c) - s.image.at(x, y, c)));
    }
    CHECK(worst < 1e-5);
    // Every inpainting token was overwritten by a prediction.
    for (const int i : r.plan.inpaint) CHECK_FALSE(std::ranges::equal(r.source_tokens.token(i), r.tokens.token(i)));
    CHECK(r.report.steps.size() == 4u);
  }
}

TEST_CASE("zero exponents reduce token_painter to deif_only") {
  const Scene s;
  auto tp_cfg = smoke(Mode::token_painter);
  tp_cfg.exponents = {0.0, 0.0, 0.0};
  tp_cfg.step0 = StepZeroFactor::alpha_lambda2;
  const auto a = run(s, tp_cfg);
  const auto b = run(s, smoke(Mode::deif_only));
  CHECK(a.tokens == b.tokens);
  CHECK(a.image == b.image);

  const auto c = run(s, smoke(Mode::token_painter));
  CHECK_FALSE(c.tokens == b.tokens);
}

TEST_CASE("deif with zero weights and a=1 reproduces the background stream") {
  Rng rng(30);
  DualStreams st;
  st.gb.values = Matrix(16, 32);
  st.gt.values = Matrix(16, 32);
  for (auto& v : st.gb.values.data()) v = rng.uniform(-1, 1);
  for (auto& v : st.gt.values.data()) v = rng.uniform(-3, 3);
  FusionWeights zero{std::vector<double>(16, 0.0), FusionKind::constant, 1, 1};
  const auto tb = compose_guidance(Mode::tb_baseline, st, zero, 0.3, AlignmentMode::corrected);
  const auto deif = compose_guidance(Mode::deif_only, st, zero, 1.0, AlignmentMode::corrected);
  CHECK(max_abs_diff(tb.tokens, deif.tokens) < 1e-6);
  CHECK(compose_guidance(Mode::t_only, st, zero, 0.3, AlignmentMode::corrected).tokens == st.gt.values);
}

TEST_CASE("report alpha and beta follow the schedule") {
  const Scene s;
  const auto r = run(s, smoke(Mode::token_painter));
  const auto& steps = r.report.steps;
  REQUIRE(steps.size() == 4u);
  const int sizes[] = {2, 3, 5, 6};
  int done = 0;
  for (int k = 0; k < 4; ++k) {
    CHECK(steps[k].step == k);
    CHECK(steps[k].set_size == sizes[k]);
    CHECK(steps[k].predicted == done);
    CHECK(steps[k].unknown == 16 - done);
    CHECK(std::abs(steps[k].alpha - 1.5) < 1e-12);
    if (k == 0) {
      CHECK_FALSE(steps[k].beta.has_value());
    } else {
      REQUIRE(steps[k].beta.has_value());
      CHECK(std::abs(*steps[k].beta - std::log(16.0 - done) / std::log(done + 1.0)) < 1e-12);
    }
    CHECK(steps[k].imag_residual < 1e-9);
    done += sizes[k];
  }
  const auto j = to_json(r.report);
  CHECK(j["steps"][0]["beta"].is_null());
  CHECK(j["background_psnr"] == "inf");
  CHECK_FALSE(j.contains("total_millis"));
  CHECK(to_json(r.report, true).contains("total_millis"));
}

TEST_CASE("token_painter shifts attention toward guidance") {
  const Scene s;
  const auto tp_run = run(s, smoke(Mode::token_painter));
  const auto deif = run(s, smoke(Mode::deif_only));
  CHECK(tp_run.report.mass_on_guidance > 0.0);
  CHECK(tp_run.report.mass_on_guidance + tp_run.report.mass_on_inpaint <= 1.0 + 1e-12);
  CHECK(deif.report.mass_on_guidance > 0.0);
}

TEST_CASE("background_psnr") {
  BinaryGrid tm(2, 2);
  tm.set(0, 0, true);
  const auto plan = build_mask_plan(tm, 0);
  Image a(4, 4, 1, 0.5), b(4, 4, 1, 0.5);
  CHECK(background_psnr(a, b, plan, 2) == std::numeric_limits<double>::infinity());
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) b.at(x, y, 0) = (x < 2 && y < 2) ? 0.0 : 0.6;
  CHECK(std::abs(background_psnr(a, b, plan, 2) - 20.0) < 1e-9);

  BinaryGrid all(2, 2);
  std::ranges::fill(all.bits, 1);
  CHECK_THROWS_AS(background_psnr(a, b, build_mask_plan(all, 0), 2), ContractError);
  CHECK_THROWS_AS(background_psnr(a, Image(4, 2, 1), plan, 2), DimensionError);
}

TEST_CASE("attention mass under uniform attention") {
  BinaryGrid tm(3, 3);
  tm.set(0, 0, true);
  tm.set(2, 2, true);
  const auto plan = build_mask_plan(tm, 0);
  const int L = 4, n = L + 9;
  AttentionRecord rec{0, 0, Matrix(n, n), Matrix(n, n, 1.0 / n)};
  const std::vector<AttentionRecord> recs{rec, rec};
  const auto m = attention_mass(recs, plan, L);
  CHECK(std::abs(m.guidance - 4.0 / 13.0) < 1e-12);
  CHECK(std::abs(m.inpaint - 2.0 / 13.0) < 1e-12);
}

TEST_CASE("run contracts") {
  const Scene s;
  PixelMask empty(64, 64);
  const auto text = prompt_tokens("x", 16, 32, 0);
  CHECK_THROWS_AS(inpaint(s.image, empty, text, smoke(Mode::token_painter)), ContractError);
  const auto t = inpaint(s.image, empty, text, smoke(Mode::t_only));
  CHECK(t.report.steps.empty());
  CHECK(t.tokens == t.source_tokens);

  PixelMask full(64, 64);
  std::ranges::fill(full.bits, 1);
  const auto all = inpaint(s.image, full, text, smoke(Mode::token_painter));
  CHECK_FALSE(all.report.background_psnr.has_value());
  CHECK(std::abs(all.report.steps[0].alpha - 1.0) < 1e-12);

  CHECK_THROWS_AS(inpaint(s.image, s.mask, prompt_tokens("x", 8, 32, 0), smoke(Mode::deif_only)), DimensionError);
  CHECK_THROWS_AS(inpaint(s.image, PixelMask(32, 32), text, smoke(Mode::deif_only)), DimensionError);
  auto bad = smoke(Mode::deif_only);
  bad.steps = 17;
  CHECK_THROWS_AS(inpaint(s.image, s.mask, text, bad), ScheduleError);
}

TEST_CASE("runs are deterministic") {
  const Scene s;
  auto cfg = smoke(Mode::token_painter);
  cfg.temperature = 0.2;
  const auto a = run(s, cfg), b = run(s, cfg);
  CHECK(a.tokens == b.tokens);
  CHECK(to_json(a.report).dump() == to_json(b.report).dump());
  cfg.seed = 1;
  CHECK_FALSE(run(s, cfg).tokens == a.tokens);
}
