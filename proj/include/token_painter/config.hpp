#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "token_painter/adae.hpp"
#include "token_painter/deif.hpp"
#include "token_painter/lattice.hpp"
#include "json.hpp"

namespace tp {

enum class Mode { tb_baseline, t_only, deif_only, token_painter };

// Accepts both the canonical names and the CLI spellings (tb, t-only, deif,
// token-painter).
Mode parse_mode(std::string_view name);
std::string_view to_string(Mode mode);

// Everything a run depends on. Defaults follow the published settings where
// they exist (p, a, tau, lambdas); the rest are desk-scale choices.
struct RunConfig {
  Mode mode = Mode::token_painter;
  int patch_size = 8;
  int dim = 32;        // model width D, also the text token width
  int token_dim = 0;   // codec token width; 0 = patch_size^2 * channels
  int text_tokens = 16;
  int enc_layers = 2;
  int dec_layers = 2;
  int heads = 4;
  int ffn_mult = 2;
  int steps = 4;
  ScheduleKind schedule = ScheduleKind::cosine;
  std::uint64_t seed = 0;

  double ring_ratio = 1.0;  // p
  double align_mix = 0.3;   // a
  int dilation_radius = 2;
  std::optional<double> phi;   // absolute width; overrides phi_relative
  double phi_relative = 0.49;  // phi = phi_relative * L
  double tau = 6.0;
  FusionKind fusion = FusionKind::m_gaussian;
  AlignmentMode alignment = AlignmentMode::corrected;

  Exponents exponents;
  StepZeroFactor step0 = StepZeroFactor::alpha_lambda2;
  std::vector<int> adae_layers;  // empty = all decoder layers
  double temperature = 0.0;

  double effective_phi() const { return phi ? *phi : phi_relative * text_tokens; }
};

// Throws ConfigError on out-of-range values.
void validate(const RunConfig& cfg);

// Fully resolved config, defaults included.
nlohmann::ordered_json to_json(const RunConfig& cfg);

// Overlays keys present in `j` onto `base`; unknown keys are rejected.
RunConfig merge_config(RunConfig base, const nlohmann::json& j);

}  // namespace tp
