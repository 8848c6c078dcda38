#include "token_painter/config.hpp"

#include <set>
#include <string>

#include "token_painter/errors.hpp"

namespace tp {

Mode parse_mode(std::string_view name) {
  if (name == "tb_baseline" || name == "tb") return Mode::tb_baseline;
  if (name == "t_only" || name == "t-only") return Mode::t_only;
  if (name == "deif_only" || name == "deif") return Mode::deif_only;
  if (name == "token_painter" || name == "token-painter") return Mode::token_painter;
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::tb_baseline: return "tb_baseline";
    case Mode::t_only: return "t_only";
    case Mode::deif_only: return "deif_only";
    case Mode::token_painter: return "token_painter";
  }
  return "?";
}

void validate(const RunConfig& cfg) {
  const auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  require(cfg.patch_size > 0, "patch_size must be positive");
  require(cfg.dim > 0 && cfg.heads > 0 && cfg.dim % cfg.heads == 0, "dim must be divisible by heads");
  require(cfg.token_dim >= 0, "token_dim must be nonnegative");
  require(cfg.text_tokens >= 2, "text_tokens must be at least 2");
  require(cfg.enc_layers > 0 && cfg.dec_layers > 0, "layer counts must be positive");
  require(cfg.ffn_mult > 0, "ffn_mult must be positive");
  require(cfg.steps > 0, "steps must be positive");
  require(cfg.ring_ratio >= 0.0, "p must be nonnegative");
  require(cfg.align_mix >= 0.0 && cfg.align_mix <= 1.0, "a must lie in [0, 1]");
  require(cfg.dilation_radius >= 0, "dilation_radius must be nonnegative");
  require(!cfg.phi || *cfg.phi > 0.0, "phi must be positive");
  require(cfg.phi_relative > 0.0, "phi_relative must be positive");
  require(cfg.tau > 0.0, "tau must be positive");
  require(cfg.exponents.lambda1 >= 0.0 && cfg.exponents.lambda2 >= 0.0 &&
              cfg.exponents.lambda3 >= 0.0,
          "lambdas must be nonnegative");
  require(cfg.temperature >= 0.0, "temperature must be nonnegative");
  for (const int l : cfg.adae_layers) {
    require(l >= 0 && l < cfg.dec_layers, "adae_layers entry out of range");
  }
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(cfg.mode);
  j["patch_size"] = cfg.patch_size;
  j["dim"] = cfg.dim;
  j["token_dim"] = cfg.token_dim;
  j["text_tokens"] = cfg.text_tokens;
  j["enc_layers"] = cfg.enc_layers;
  j["dec_layers"] = cfg.dec_layers;
  j["heads"] = cfg.heads;
  j["ffn_mult"] = cfg.ffn_mult;
  j["steps"] = cfg.steps;
  j["schedule"] = to_string(cfg.schedule);
  j["seed"] = cfg.seed;
  j["p"] = cfg.ring_ratio;
  j["a"] = cfg.align_mix;
  j["dilation_radius"] = cfg.dilation_radius;
  j["phi"] = cfg.phi ? nlohmann::ordered_json(*cfg.phi) : nlohmann::ordered_json(nullptr);
  j["phi_relative"] = cfg.phi_relative;
  j["phi_effective"] = cfg.effective_phi();
  j["tau"] = cfg.tau;
  j["fusion"] = to_string(cfg.fusion);
  j["alignment"] = to_string(cfg.alignment);
  j["lambda1"] = cfg.exponents.lambda1;
  j["lambda2"] = cfg.exponents.lambda2;
  j["lambda3"] = cfg.exponents.lambda3;
  j["step0_factor"] = to_string(cfg.step0);
  j["adae_layers"] = cfg.adae_layers;
  j["temperature"] = cfg.temperature;
  return j;
}

RunConfig merge_config(RunConfig cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  static const std::set<std::string> known = {
      "mode", "patch_size", "dim", "token_dim", "text_tokens", "enc_layers", "dec_layers", "heads",
      "ffn_mult", "steps", "schedule", "seed", "p", "a", "dilation_radius", "phi",
      "phi_relative", "phi_effective", "tau", "fusion", "alignment", "lambda1", "lambda2",
      "lambda3", "step0_factor", "adae_layers", "temperature"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("config: unknown key '" + key + "'");
  }
  try {
    if (j.contains("mode")) cfg.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("patch_size")) cfg.patch_size = j.at("patch_size").get<int>();
    if (j.contains("dim")) cfg.dim = j.at("dim").get<int>();
    if (j.contains("token_dim")) cfg.token_dim = j.at("token_dim").get<int>();
    if (j.contains("text_tokens")) cfg.text_tokens = j.at("text_tokens").get<int>();
    if (j.contains("enc_layers")) cfg.enc_layers = j.at("enc_layers").get<int>();
    if (j.contains("dec_layers")) cfg.dec_layers = j.at("dec_layers").get<int>();
    if (j.contains("heads")) cfg.heads = j.at("heads").get<int>();
    if (j.contains("ffn_mult")) cfg.ffn_mult = j.at("ffn_mult").get<int>();
    if (j.contains("steps")) cfg.steps = j.at("steps").get<int>();
    if (j.contains("schedule")) cfg.schedule = parse_schedule_kind(j.at("schedule").get<std::string>());
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("p")) cfg.ring_ratio = j.at("p").get<double>();
    if (j.contains("a")) cfg.align_mix = j.at("a").get<double>();
    if (j.contains("dilation_radius")) cfg.dilation_radius = j.at("dilation_radius").get<int>();
    if (j.contains("phi")) {
      if (j.at("phi").is_null()) {
        cfg.phi.reset();
      } else {
        cfg.phi = j.at("phi").get<double>();
      }
    }
    if (j.contains("phi_relative")) cfg.phi_relative = j.at("phi_relative").get<double>();
    if (j.contains("tau")) cfg.tau = j.at("tau").get<double>();
    if (j.contains("fusion")) cfg.fusion = parse_fusion_kind(j.at("fusion").get<std::string>());
    if (j.contains("alignment")) cfg.alignment = parse_alignment_mode(j.at("alignment").get<std::string>());
    if (j.contains("lambda1")) cfg.exponents.lambda1 = j.at("lambda1").get<double>();
    if (j.contains("lambda2")) cfg.exponents.lambda2 = j.at("lambda2").get<double>();
    if (j.contains("lambda3")) cfg.exponents.lambda3 = j.at("lambda3").get<double>();
    if (j.contains("step0_factor")) cfg.step0 = parse_step0_factor(j.at("step0_factor").get<std::string>());
    if (j.contains("adae_layers")) cfg.adae_layers = j.at("adae_layers").get<std::vector<int>>();
    if (j.contains("temperature")) cfg.temperature = j.at("temperature").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

}  // namespace tp
