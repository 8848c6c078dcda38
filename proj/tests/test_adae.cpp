#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "token_painter/adae.hpp"
#include "token_painter/errors.hpp"
#include "token_painter/rng.hpp"

using namespace tp;

namespace {

Matrix random_logits(int n, Rng& rng) {
  Matrix m(n, n);
  for (auto& v : m.data()) v = rng.uniform(-3, 3);
  return m;
}

double softmax_mass(std::span<const double> row, const std::set<int>& cols) {
  double peak = row[0];
  for (const double v : row) peak = std::max(peak, v);
  double total = 0, hit = 0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double e = std::exp(row[j] - peak);
    total += e;
    if (cols.contains(static_cast<int>(j))) hit += e;
  }
  return hit / total;
}

struct Split {
  std::vector<int> inpaint, unknown, predicted;
};

Split random_split(int hw, int n, int n2, Rng& rng) {
  std::vector<int> all(hw);
  for (int i = 0; i < hw; ++i) all[i] = i;
  rng.shuffle(std::span<int>(all));
  Split s;
  s.inpaint.assign(all.begin(), all.begin() + n);
  s.predicted.assign(s.inpaint.begin(), s.inpaint.begin() + n2);
  s.unknown.assign(s.inpaint.begin() + n2, s.inpaint.end());
  return s;
}

}  // namespace

TEST_CASE("alpha and beta identities") {
  CHECK(std::abs(compute_alpha(64, 64) - 1.0) < 1e-12);
  CHECK(std::abs(compute_alpha(16, 64) - 1.5) < 1e-12);
  CHECK(std::abs(compute_alpha(4, 64) - 3.0) < 1e-12);
  CHECK(std::abs(compute_alpha(1, 64) - 6.0) < 1e-12);
  CHECK(std::abs(compute_beta(5, 4) - 1.0) < 1e-12);
  CHECK(std::abs(compute_beta(9, 2) - 2.0) < 1e-12);
  CHECK(std::abs(compute_beta(8, 3) - 1.5) < 1e-12);
  CHECK(compute_beta(1, 7) == 0.0);
  CHECK_THROWS_AS(compute_beta(3, 0), ContractError);
  CHECK_THROWS_AS(compute_alpha(0, 64), ContractError);
  CHECK_THROWS_AS(compute_alpha(65, 64), ContractError);
}

TEST_CASE("factors") {
  const std::vector<int> ip{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  const std::vector<int> none;
  auto s0 = make_enhancement_spec(16, 64, ip, ip, none, {}, StepZeroFactor::alpha_lambda2, 0);
  CHECK(s0.alpha == doctest::Approx(1.5).epsilon(1e-14));
  CHECK_FALSE(s0.beta.has_value());
  CHECK(std::abs(s0.guidance_factor() - 1.129346935456855451446295795134380268436) < 1e-14);
  CHECK(std::abs(s0.inpaint_factor() - 1.041379743992410586846191010231115338121) < 1e-14);
  s0.step0 = StepZeroFactor::none;
  CHECK(s0.inpaint_factor() == 1.0);

  // beta trace of the 16-token, 4-step cosine run: sizes 2, 3, 5, 6.
  int done = 0;
  const double expect[] = {std::log(14.0) / std::log(3.0), std::log(11.0) / std::log(6.0),
                           std::log(6.0) / std::log(11.0)};
  for (int k = 1; k <= 3; ++k) {
    done += std::vector<int>{2, 3, 5}[k - 1];
    const std::vector<int> pred(ip.begin(), ip.begin() + done), unk(ip.begin() + done, ip.end());
    const auto s = make_enhancement_spec(16, 64, ip, unk, pred, {}, StepZeroFactor::alpha_lambda2, k);
    REQUIRE(s.beta.has_value());
    CHECK(std::abs(*s.beta - expect[k - 1]) < 1e-12);
  }
  CHECK(expect[0] == doctest::Approx(2.402).epsilon(1e-3));
  CHECK(expect[1] == doctest::Approx(1.338).epsilon(1e-3));
  CHECK(expect[2] == doctest::Approx(0.747).epsilon(1e-3));

  const std::vector<int> overlap{3};
  const std::vector<int> rest(ip.begin() + 1, ip.end());
  CHECK_THROWS_AS(make_enhancement_spec(16, 64, ip, rest, overlap, {}, StepZeroFactor::none, 1), ContractError);
}

TEST_CASE("enhancement touches only the targeted blocks") {
  Rng rng(20);
  const int L = 16, hw = 77, n = L + hw;
  for (int t = 0; t < 20; ++t) {
    const int count = 2 + static_cast<int>(rng.below(40));
    const int n2 = static_cast<int>(rng.below(count));
    const auto sp = random_split(hw, count, n2, rng);
    const Exponents e{0.3, 0.1, 0.03};
    const auto spec = make_enhancement_spec(L, hw, sp.inpaint, sp.unknown, sp.predicted, e,
                                            StepZeroFactor::alpha_lambda2, n2 > 0 ? 1 : 0);
    const auto orig = random_logits(n, rng);
    const double a = std::log(77.0) / std::log(std::max(count, 2) * 1.0);
    const double g = std::pow(a, 0.3);
    const double f = n2 > 0 ? std::pow(std::log(double(count - n2)) / std::log(n2 + 1.0), 0.03) * std::pow(a, 0.1)
                            : std::pow(a, 0.1);
    std::set<int> rows, cols;
    for (const int u : sp.unknown) rows.insert(L + u);
    for (const int c : (n2 > 0 ? sp.predicted : sp.inpaint)) cols.insert(L + c);

    auto gm = orig;
    enhance_guidance(gm, spec);
    auto im = orig;
    enhance_inpainting(im, spec);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const bool grow = rows.contains(i) && j < L;
        const bool irow = rows.contains(i) && cols.contains(j);
        if (grow) {
          CHECK(gm(i, j) == orig(i, j) * spec.guidance_factor());
          CHECK(std::abs(spec.guidance_factor() - g) < 1e-12);
        } else {
          CHECK(gm(i, j) == orig(i, j));
        }
        if (irow) {
          CHECK(im(i, j) == orig(i, j) * spec.inpaint_factor());
          CHECK(std::abs(spec.inpaint_factor() - f) < 1e-12);
        } else {
          CHECK(im(i, j) == orig(i, j));
        }
      }
    }
    // The two enhancements act on disjoint blocks, so order is irrelevant.
    auto ab = orig, ba = orig;
    enhance_guidance(ab, spec);
    enhance_inpainting(ab, spec);
    enhance_inpainting(ba, spec);
    enhance_guidance(ba, spec);
    CHECK(ab == ba);
  }
}

TEST_CASE("zero exponents leave logits unchanged") {
  Rng rng(21);
  const auto sp = random_split(64, 16, 5, rng);
  const auto spec = make_enhancement_spec(16, 64, sp.inpaint, sp.unknown, sp.predicted, {0, 0, 0},
                                          StepZeroFactor::alpha_lambda2, 1);
  const auto orig = random_logits(80, rng);
  auto m = orig;
  enhance_guidance(m, spec);
  enhance_inpainting(m, spec);
  CHECK(m == orig);
  Matrix wrong(79, 79);
  CHECK_THROWS_AS(enhance_guidance(wrong, spec), DimensionError);
}

TEST_CASE("hook respects layer selection") {
  Rng rng(22);
  const auto sp = random_split(64, 16, 0, rng);
  const auto spec = make_enhancement_spec(16, 64, sp.inpaint, sp.unknown, sp.predicted, {},
                                          StepZeroFactor::alpha_lambda2, 0);
  const auto orig = random_logits(80, rng);
  const auto hook = make_enhancement_hook(spec, {true, true, {1}});
  auto m0 = orig, m1 = orig;
  hook(0, 0, m0);
  hook(1, 3, m1);
  CHECK(m0 == orig);
  CHECK_FALSE(m1 == orig);
  auto expect = orig;
  enhance_guidance(expect, spec);
  enhance_inpainting(expect, spec);
  CHECK(m1 == expect);
}

TEST_CASE("targeted softmax mass grows with the scale factor") {
  Rng rng(23);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> row(93);
    for (auto& v : row) v = rng.uniform(-2, 2);
    std::set<int> cols;
    for (int j = 0; j < 16; ++j) {
      row[j] = rng.uniform(0.1, 2.0);
      cols.insert(j);
    }
    double prev = -1;
    for (const double s : {1.0, 1.1, 1.2, 1.5}) {
      auto r = row;
      for (const int j : cols) r[j] *= s;
      const double mass = softmax_mass(r, cols);
      CHECK(mass > prev);
      prev = mass;
    }
  }
}
