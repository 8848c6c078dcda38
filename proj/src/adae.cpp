#include "token_painter/adae.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "token_painter/errors.hpp"

namespace tp {

double compute_alpha(int inpaint_count, int grid_tokens) {
  if (grid_tokens < 2) throw ContractError("alpha: HW must be at least 2");
  if (inpaint_count < 1 || inpaint_count > grid_tokens) {
    throw ContractError("alpha: inpaint count " + std::to_string(inpaint_count) +
                        " outside [1, " + std::to_string(grid_tokens) + "]");
  }
  return std::log(static_cast<double>(grid_tokens)) /
         std::log(static_cast<double>(std::max(inpaint_count, 2)));
}

double compute_beta(int unknown_count, int predicted_count) {
  if (predicted_count < 1) {
    throw ContractError("beta: no predicted tokens yet (N2 = 0); use the first-step path");
  }
  if (unknown_count < 1) throw ContractError("beta: N1 must be at least 1");
  return std::log(static_cast<double>(unknown_count)) /
         std::log(static_cast<double>(predicted_count) + 1.0);
}

StepZeroFactor parse_step0_factor(std::string_view name) {
  if (name == "alpha_lambda2") return StepZeroFactor::alpha_lambda2;
  if (name == "alpha_lambda1") return StepZeroFactor::alpha_lambda1;
  if (name == "none") return StepZeroFactor::none;
  throw ConfigError("unknown step0_factor '" + std::string(name) + "'");
}

std::string_view to_string(StepZeroFactor f) {
  switch (f) {
    case StepZeroFactor::alpha_lambda2: return "alpha_lambda2";
    case StepZeroFactor::alpha_lambda1: return "alpha_lambda1";
    case StepZeroFactor::none: return "none";
  }
  return "?";
}

double EnhancementSpec::guidance_factor() const { return std::pow(alpha, exponents.lambda1); }

double EnhancementSpec::inpaint_factor() const {
  if (beta) return std::pow(*beta, exponents.lambda3) * std::pow(alpha, exponents.lambda2);
  switch (step0) {
    case StepZeroFactor::alpha_lambda2: return std::pow(alpha, exponents.lambda2);
    case StepZeroFactor::alpha_lambda1: return std::pow(alpha, exponents.lambda1);
    case StepZeroFactor::none: return 1.0;
  }
  return 1.0;
}

EnhancementSpec make_enhancement_spec(int text_tokens, int grid_tokens,
                                      std::span<const int> inpaint,
                                      std::span<const int> unknown,
                                      std::span<const int> predicted, const Exponents& exponents,
                                      StepZeroFactor step0, int step) {
  if (unknown.size() + predicted.size() != inpaint.size()) {
    throw ContractError("enhancement: N1 + N2 must equal N");
  }
  std::vector<std::uint8_t> seen(grid_tokens, 0);
  for (const int i : unknown) {
    if (i < 0 || i >= grid_tokens) throw ContractError("enhancement: index out of range");
    seen[i] = 1;
  }
  for (const int i : predicted) {
    if (i < 0 || i >= grid_tokens) throw ContractError("enhancement: index out of range");
    if (seen[i]) throw ContractError("enhancement: unknown and predicted sets overlap");
  }

  EnhancementSpec spec;
  spec.text_tokens = text_tokens;
  spec.grid_tokens = grid_tokens;
  spec.exponents = exponents;
  spec.step0 = step0;
  spec.step = step;
  const auto to_slots = [&](std::span<const int> idx) {
    std::vector<int> out(idx.size());
    std::ranges::transform(idx, out.begin(), [&](int i) { return text_tokens + i; });
    return out;
  };
  spec.unknown_rows = to_slots(unknown);
  spec.predicted_cols = to_slots(predicted);
  spec.inpaint_slots = to_slots(inpaint);
  spec.alpha = compute_alpha(static_cast<int>(inpaint.size()), grid_tokens);
  if (!predicted.empty()) {
    spec.beta = compute_beta(static_cast<int>(unknown.size()), static_cast<int>(predicted.size()));
  }
  return spec;
}

namespace {

void check_shape(const Matrix& logits, const EnhancementSpec& spec) {
  const auto n = static_cast<std::size_t>(spec.slots());
  if (logits.rows() != n || logits.cols() != n) {
    throw DimensionError("enhancement: logits are " + std::to_string(logits.rows()) + "x" +
                         std::to_string(logits.cols()) + ", expected " + std::to_string(n) +
                         " square");
  }
  for (const auto* set : {&spec.unknown_rows, &spec.predicted_cols, &spec.inpaint_slots}) {
    for (const int s : *set) {
      if (s < spec.text_tokens || s >= spec.slots()) {
        throw DimensionError("enhancement: slot " + std::to_string(s) + " outside image range");
      }
    }
  }
}

}  // namespace

void enhance_guidance(Matrix& logits, const EnhancementSpec& spec) {
  check_shape(logits, spec);
  const double factor = spec.guidance_factor();
  for (const int i : spec.unknown_rows) {
    auto row = logits.row(i);
    for (int j = 0; j < spec.text_tokens; ++j) row[j] *= factor;
  }
}

void enhance_inpainting(Matrix& logits, const EnhancementSpec& spec) {
  check_shape(logits, spec);
  const double factor = spec.inpaint_factor();
  const auto& cols = spec.beta ? spec.predicted_cols : spec.inpaint_slots;
  for (const int i : spec.unknown_rows) {
    auto row = logits.row(i);
    for (const int j : cols) row[j] *= factor;
  }
}

LogitHook make_enhancement_hook(const EnhancementSpec& spec, const HookSelection& selection) {
  return [spec, selection](int layer, int /*head*/, Matrix& logits) {
    if (!selection.layers.empty() && std::ranges::find(selection.layers, layer) == selection.layers.end()) {
      return;
    }
    if (selection.guidance) enhance_guidance(logits, spec);
    if (selection.inpaint) enhance_inpainting(logits, spec);
  };
}

}  // namespace tp
