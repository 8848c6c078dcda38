#include "token_painter/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "token_painter/adae.hpp"
#include "token_painter/errors.hpp"
#include "token_painter/rng.hpp"

namespace tp {

namespace {

using Clock = std::chrono::steady_clock;

double millis_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Codec and model seeds are derived from the run seed on separate streams.
constexpr std::uint64_t kCodecStream = 1;
constexpr std::uint64_t kModelStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

}  // namespace

Matrix prompt_tokens(std::string_view prompt, int text_tokens, int dim, std::uint64_t seed) {
  if (text_tokens <= 0 || dim <= 0) throw ConfigError("prompt tokens: L and D must be positive");
  Rng rng(Rng::derive(stable_hash(prompt), seed));
  Matrix t(text_tokens, dim);
  for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

GuidanceResult compose_guidance(Mode mode, const DualStreams& streams,
                                const FusionWeights& weights, double align_mix,
                                AlignmentMode alignment) {
  switch (mode) {
    case Mode::tb_baseline: return {streams.gb.values, 0.0};
    case Mode::t_only: return {streams.gt.values, 0.0};
    case Mode::deif_only:
    case Mode::token_painter: {
      const auto aligned = align_streams(streams.gb.values, streams.gt.values, align_mix, alignment);
      auto fused = frequency_fuse(aligned.gb, aligned.gt, weights.w);
      return {std::move(fused.tokens), fused.imag_residual};
    }
  }
  throw ConfigError("unhandled mode");
}

InpaintResult inpaint(const Image& img, const PixelMask& pm, const Matrix& text,
                      const RunConfig& cfg) {
  validate(cfg);
  const auto t_start = Clock::now();
  if (pm.rows != img.height || pm.cols != img.width) {
    throw DimensionError("mask is " + std::to_string(pm.cols) + "x" + std::to_string(pm.rows) +
                         " but image is " + std::to_string(img.width) + "x" +
                         std::to_string(img.height));
  }
  const int token_dim =
      cfg.token_dim > 0 ? cfg.token_dim : cfg.patch_size * cfg.patch_size * img.channels;
  const Codec codec(cfg.patch_size, img.channels, token_dim, Rng::derive(cfg.seed, kCodecStream));

  InpaintResult out;
  out.plan = build_mask_plan(downsample_mask(pm, cfg.patch_size), cfg.dilation_radius);
  out.source_tokens = codec.encode(img);
  out.tokens = out.source_tokens;
  const auto& plan = out.plan;
  const int L = cfg.text_tokens;
  const int hw = plan.grid_tokens();
  const int n = static_cast<int>(plan.inpaint.size());

  auto& report = out.report;
  report.grid_rows = plan.rows;
  report.grid_cols = plan.cols;
  report.inpaint_count = n;

  if (text.rows() != static_cast<std::size_t>(L) || text.cols() != static_cast<std::size_t>(cfg.dim)) {
    throw DimensionError("text tokens must be " + std::to_string(L) + "x" + std::to_string(cfg.dim));
  }
  if (n == 0 && cfg.mode != Mode::t_only) {
    throw ContractError("mask selects no tokens; inpainting modes need N >= 1");
  }

  ModelConfig mc;
  mc.dim = cfg.dim;
  mc.token_dim = token_dim;
  mc.heads = cfg.heads;
  mc.enc_layers = cfg.enc_layers;
  mc.dec_layers = cfg.dec_layers;
  mc.text_tokens = L;
  mc.image_tokens = hw;
  mc.ffn_mult = cfg.ffn_mult;
  mc.seed = Rng::derive(cfg.seed, kModelStream);
  const ModelParams params = init_model(mc);
  const StepSchedule schedule =
      n > 0 ? build_schedule(plan.inpaint, cfg.steps, cfg.seed, cfg.schedule) : StepSchedule{};
  const std::vector<int> ring = select_context_ring(plan, cfg.ring_ratio, n);
  report.ring_count = static_cast<int>(ring.size());
  const FusionWeights weights = fusion_weights(L, cfg.fusion, cfg.effective_phi(), cfg.tau);

  auto& grid = out.tokens;
  for (const int i : plan.inpaint) std::ranges::copy(params.mask_token, grid.token(i).begin());

  DualStreams streams;
  if (cfg.mode != Mode::tb_baseline) streams.gt = run_text_stream(params, text);

  const HookSelection selection{true, true, cfg.adae_layers};
  std::vector<int> predicted;
  std::vector<std::uint8_t> done(hw, 0);

  for (int k = 0; k < schedule.steps(); ++k) {
    const auto t_step = Clock::now();
    const auto& target = schedule.sets[k];
    std::vector<int> unknown;
    for (const int i : plan.inpaint)
      if (!done[i]) unknown.push_back(i);

    if (cfg.mode != Mode::t_only) {
      streams.gb = run_context_stream(params, text, grid, {ring, predicted, unknown});
    }
    const GuidanceResult guidance =
        compose_guidance(cfg.mode, streams, weights, cfg.align_mix, cfg.alignment);

    const EnhancementSpec spec = make_enhancement_spec(L, hw, plan.inpaint, unknown, predicted,
                                                       cfg.exponents, cfg.step0, k);
    LogitHook hook;
    if (cfg.mode == Mode::token_painter) hook = make_enhancement_hook(spec, selection);

    DecodeOptions options;
    options.hook = hook ? &hook : nullptr;
    options.capture = true;
    options.temperature = cfg.temperature;
    options.noise_seed = Rng::derive(Rng::derive(cfg.seed, kNoiseStream), static_cast<std::uint64_t>(k));
    auto decoded = decode(params, guidance.tokens, grid, unknown, target, options);

    for (std::size_t t = 0; t < target.size(); ++t) {
      std::ranges::copy(decoded.predictions.row(t), grid.token(target[t]).begin());
      done[target[t]] = 1;
    }
    for (auto& rec : decoded.records) out.records.push_back(std::move(rec));

    StepRecord rec;
    rec.step = k;
    rec.set_size = static_cast<int>(target.size());
    rec.unknown = static_cast<int>(unknown.size());
    rec.predicted = static_cast<int>(predicted.size());
    rec.alpha = spec.alpha;
    rec.beta = spec.beta;
    rec.imag_residual = guidance.imag_residual;
    rec.millis = millis_since(t_step);
    report.steps.push_back(rec);
    report.imag_residual_max = std::max(report.imag_residual_max, guidance.imag_residual);

    predicted.insert(predicted.end(), target.begin(), target.end());
    std::ranges::sort(predicted);
  }

  out.image = codec.decode(grid);
  if (!plan.background.empty()) {
    // Measured against the codec reconstruction of the input, so the value
    // isolates what generation did to the background tokens.
    report.background_psnr =
        background_psnr(codec.decode(out.source_tokens), out.image, plan, cfg.patch_size);
  }
  if (!out.records.empty() && n > 0) {
    const auto mass = attention_mass(out.records, plan, L);
    report.mass_on_guidance = mass.guidance;
    report.mass_on_inpaint = mass.inpaint;
    out.maps = attention_maps(out.records, plan, L);
  } else {
    out.maps = attention_maps({}, plan, L);
  }
  report.total_millis = millis_since(t_start);
  return out;
}

double background_psnr(const Image& original, const Image& result, const MaskPlan& plan,
                       int patch_size) {
  if (original.width != result.width || original.height != result.height ||
      original.channels != result.channels) {
    throw DimensionError("background_psnr: image dimensions differ");
  }
  if (original.width != plan.cols * patch_size || original.height != plan.rows * patch_size) {
    throw DimensionError("background_psnr: plan does not match image size");
  }
  if (plan.background.empty()) {
    throw ContractError("background_psnr: every token is masked, no background to measure");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (const int idx : plan.background) {
    const int h = idx / plan.cols, w = idx % plan.cols;
    for (int y = h * patch_size; y < (h + 1) * patch_size; ++y) {
      for (int x = w * patch_size; x < (w + 1) * patch_size; ++x) {
        for (int c = 0; c < original.channels; ++c) {
          const double e = original.at(x, y, c) - result.at(x, y, c);
          sum += e * e;
          ++count;
        }
      }
    }
  }
  const double mse = sum / static_cast<double>(count);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

AttentionMass attention_mass(std::span<const AttentionRecord> records, const MaskPlan& plan,
                             int text_tokens) {
  AttentionMass mass;
  if (records.empty() || plan.inpaint.empty()) return mass;
  for (const auto& rec : records) {
    for (const int r : plan.inpaint) {
      const auto row = rec.weights.row(static_cast<std::size_t>(text_tokens + r));
      double g = 0.0, p = 0.0;
      for (int j = 0; j < text_tokens; ++j) g += row[j];
      for (const int c : plan.inpaint) p += row[text_tokens + c];
      mass.guidance += g;
      mass.inpaint += p;
    }
  }
  const double count = static_cast<double>(records.size() * plan.inpaint.size());
  mass.guidance /= count;
  mass.inpaint /= count;
  return mass;
}

nlohmann::ordered_json to_json(const RunReport& report, bool include_timing) {
  nlohmann::ordered_json j;
  j["grid"] = {report.grid_rows, report.grid_cols};
  j["inpaint_count"] = report.inpaint_count;
  j["ring_count"] = report.ring_count;
  auto steps = nlohmann::ordered_json::array();
  for (const auto& s : report.steps) {
    nlohmann::ordered_json row;
    row["k"] = s.step;
    row["set_size"] = s.set_size;
    row["N1"] = s.unknown;
    row["N2"] = s.predicted;
    row["alpha"] = s.alpha;
    row["beta"] = s.beta ? nlohmann::ordered_json(*s.beta) : nlohmann::ordered_json(nullptr);
    row["imag_residual"] = s.imag_residual;
    if (include_timing) row["millis"] = s.millis;
    steps.push_back(row);
  }
  j["steps"] = steps;
  j["imag_residual_max"] = report.imag_residual_max;
  if (!report.background_psnr) {
    j["background_psnr"] = nullptr;
  } else if (std::isinf(*report.background_psnr)) {
    j["background_psnr"] = "inf";
  } else {
    j["background_psnr"] = *report.background_psnr;
  }
  j["mass_on_guidance"] = report.mass_on_guidance;
  j["mass_on_inpaint"] = report.mass_on_inpaint;
  if (include_timing) j["total_millis"] = report.total_millis;
  return j;
}

Image demo_image(int width, int height, int channels, std::uint64_t seed) {
  Image img(width, height, channels);
  Rng rng(Rng::derive(seed, 0xde70));
  std::vector<double> phase(channels * 2);
  for (auto& p : phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = static_cast<double>(x) / width, v = static_cast<double>(y) / height;
      for (int c = 0; c < channels; ++c) {
        const double wave = std::sin(6.0 * u + phase[2 * c]) * std::cos(4.0 * v + phase[2 * c + 1]);
        img.at(x, y, c) = std::clamp(0.5 + 0.25 * wave + 0.2 * (u - v), 0.0, 1.0);
      }
    }
  }
  return img;
}

PixelMask demo_mask(int width, int height, int x0, int y0, int x1, int y1) {
  PixelMask m(height, width);
  for (int y = std::max(0, y0); y < std::min(height, y1); ++y)
    for (int x = std::max(0, x0); x < std::min(width, x1); ++x) m.set(y, x, true);
  return m;
}

}  // namespace tp
