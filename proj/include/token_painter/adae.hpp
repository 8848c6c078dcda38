#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "token_painter/matrix.hpp"
#include "token_painter/refmodel.hpp"

namespace tp {

// alpha = log_N(HW), with the base floored at 2.
double compute_alpha(int inpaint_count, int grid_tokens);

// beta = log_{N2 + 1}(N1); requires N2 >= 1.
double compute_beta(int unknown_count, int predicted_count);

// Scale applied to unknown -> inpainting logits on the first step, when no
// inpainting token has been predicted yet.
enum class StepZeroFactor { alpha_lambda2, alpha_lambda1, none };

StepZeroFactor parse_step0_factor(std::string_view name);
std::string_view to_string(StepZeroFactor f);

struct Exponents {
  double lambda1 = 0.3;
  double lambda2 = 0.1;
  double lambda3 = 0.03;
};

// Index sets are attention slots: guidance occupies [0, L), image token i
// sits at slot L + i.
struct EnhancementSpec {
  int text_tokens = 0;
  int grid_tokens = 0;
  std::vector<int> unknown_rows;    // I_p1 slots
  std::vector<int> predicted_cols;  // I_p2 slots
  std::vector<int> inpaint_slots;   // all of I_p, used on the first step
  double alpha = 1.0;
  std::optional<double> beta;       // unset on the first step
  Exponents exponents;
  StepZeroFactor step0 = StepZeroFactor::alpha_lambda2;
  int step = 0;

  int slots() const { return text_tokens + grid_tokens; }
  double guidance_factor() const;
  double inpaint_factor() const;
};

// Builds the spec for one generation step from flat lattice indices.
EnhancementSpec make_enhancement_spec(int text_tokens, int grid_tokens,
                                      std::span<const int> inpaint,
                                      std::span<const int> unknown,
                                      std::span<const int> predicted, const Exponents& exponents,
                                      StepZeroFactor step0, int step);

// A[i][j] *= alpha^lambda1 for unknown rows i and guidance columns j.
void enhance_guidance(Matrix& logits, const EnhancementSpec& spec);

// A[i][j] *= beta^lambda3 * alpha^lambda2 for unknown rows i and predicted
// columns j; on the first step every inpainting column gets the step-zero
// factor instead.
void enhance_inpainting(Matrix& logits, const EnhancementSpec& spec);

struct HookSelection {
  bool guidance = true;
  bool inpaint = true;
  std::vector<int> layers;  // empty = every decoder layer
};

LogitHook make_enhancement_hook(const EnhancementSpec& spec, const HookSelection& selection);

}  // namespace tp
