#include "token_painter/refmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "token_painter/errors.hpp"
#include "token_painter/rng.hpp"

namespace tp {

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}

Block make_block(int dim, int ffn, double bound, Rng& rng) {
  Block b;
  b.wq = uniform_matrix(dim, dim, bound, rng);
  b.wk = uniform_matrix(dim, dim, bound, rng);
  b.wv = uniform_matrix(dim, dim, bound, rng);
  b.wo = uniform_matrix(dim, dim, bound, rng);
  b.w1 = uniform_matrix(dim, ffn, bound, rng);
  b.w2 = uniform_matrix(ffn, dim, bound, rng);
  return b;
}

Matrix layer_norm(const Matrix& x) {
  constexpr double kEps = 1e-5;
  Matrix out(x.rows(), x.cols());
  const auto n = static_cast<double>(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    double mean = 0.0;
    for (const double v : in) mean += v;
    mean /= n;
    double var = 0.0;
    for (const double v : in) var += (v - mean) * (v - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + kEps);
    auto o = out.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) o[c] = (in[c] - mean) * inv;
  }
  return out;
}

double gelu(double x) {
  constexpr double k = 0.7978845608028654;  // sqrt(2 / pi)
  return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

void softmax_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double peak = *std::ranges::max_element(row);
    double sum = 0.0;
    for (auto& v : row) {
      v = std::exp(v - peak);
      sum += v;
    }
    for (auto& v : row) v /= sum;
  }
}

struct AttentionContext {
  int heads = 1;
  int layer = 0;
  const LogitHook* hook = nullptr;
  std::vector<AttentionRecord>* capture = nullptr;
};

// Multi-head self-attention. Positions enter through the query/key input
// only, so a block with zero output projections is an exact identity.
Matrix self_attention(const Block& block, const Matrix& normed, const Matrix& qk_in,
                      const AttentionContext& ctx) {
  const Matrix q = matmul(qk_in, block.wq);
  const Matrix k = matmul(qk_in, block.wk);
  const Matrix v = matmul(normed, block.wv);
  const std::size_t n = normed.rows();
  const std::size_t dim = normed.cols();
  const std::size_t dh = dim / static_cast<std::size_t>(ctx.heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix mixed(n, dim);
  for (int h = 0; h < ctx.heads; ++h) {
    const std::size_t off = static_cast<std::size_t>(h) * dh;
    Matrix logits(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto qi = q.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        const auto kj = k.row(j);
        double s = 0.0;
        for (std::size_t d = 0; d < dh; ++d) s += qi[off + d] * kj[off + d];
        logits(i, j) = s * scale;
      }
    }
    if (ctx.hook && *ctx.hook) (*ctx.hook)(ctx.layer, h, logits);
    Matrix weights = logits;
    softmax_rows(weights);
    for (std::size_t i = 0; i < n; ++i) {
      const auto wi = weights.row(i);
      auto out = mixed.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        const double wij = wi[j];
        const auto vj = v.row(j);
        for (std::size_t d = 0; d < dh; ++d) out[off + d] += wij * vj[off + d];
      }
    }
    if (ctx.capture) {
      ctx.capture->push_back({ctx.layer, h, std::move(logits), std::move(weights)});
    }
  }
  return matmul(mixed, block.wo);
}

void run_block(const Block& block, Matrix& x, const Matrix& pos, const AttentionContext& ctx) {
  const Matrix normed = layer_norm(x);
  Matrix qk_in = normed;
  for (std::size_t i = 0; i < qk_in.size(); ++i) qk_in.data()[i] += pos.data()[i];
  const Matrix attn = self_attention(block, normed, qk_in, ctx);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += attn.data()[i];

  Matrix hidden = matmul(layer_norm(x), block.w1);
  for (auto& v : hidden.data()) v = gelu(v);
  const Matrix ffn = matmul(hidden, block.w2);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += ffn.data()[i];
}

void check_config(const ModelConfig& cfg) {
  if (cfg.dim <= 0 || cfg.heads <= 0 || cfg.dim % cfg.heads != 0) {
    throw ConfigError("model: dim " + std::to_string(cfg.dim) + " must be divisible by heads " +
                      std::to_string(cfg.heads));
  }
  if (cfg.enc_layers <= 0 || cfg.dec_layers <= 0) throw ConfigError("model: layers must be positive");
  if (cfg.text_tokens <= 0 || cfg.image_tokens <= 0) {
    throw ConfigError("model: text and image token counts must be positive");
  }
  if (cfg.ffn_mult <= 0) throw ConfigError("model: ffn_mult must be positive");
  if (cfg.token_dim < 0) throw ConfigError("model: token_dim must be nonnegative");
}

}  // namespace

ModelParams init_model(const ModelConfig& cfg) {
  check_config(cfg);
  ModelParams p;
  p.config = cfg;
  Rng rng(Rng::derive(cfg.seed, 0x30de1));
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  const int ffn = cfg.dim * cfg.ffn_mult;
  for (int l = 0; l < cfg.enc_layers; ++l) p.encoder.push_back(make_block(cfg.dim, ffn, bound, rng));
  for (int l = 0; l < cfg.dec_layers; ++l) p.decoder.push_back(make_block(cfg.dim, ffn, bound, rng));
  p.positions = uniform_matrix(cfg.slots(), cfg.dim, bound, rng);
  p.embed = uniform_matrix(cfg.image_dim(), cfg.dim, bound, rng);
  p.mask_token.resize(cfg.image_dim());
  for (auto& v : p.mask_token) v = rng.uniform(-bound, bound);
  p.head = uniform_matrix(cfg.dim, cfg.image_dim(), bound, rng);
  return p;
}

Matrix embed_image_tokens(const ModelParams& params, const Matrix& tokens) {
  if (tokens.cols() != static_cast<std::size_t>(params.config.image_dim())) {
    throw DimensionError("embed: image token width mismatch");
  }
  return matmul(tokens, params.embed);
}

Matrix encode(const ModelParams& params, const Matrix& seq, std::span<const int> slots) {
  const auto& cfg = params.config;
  if (seq.cols() != static_cast<std::size_t>(cfg.dim)) throw DimensionError("encode: token dim mismatch");
  if (seq.rows() > static_cast<std::size_t>(cfg.slots())) throw DimensionError("encode: sequence too long");
  if (!slots.empty() && slots.size() != seq.rows()) throw DimensionError("encode: slot count mismatch");

  std::vector<int> ids(seq.rows());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = slots.empty() ? static_cast<int>(i) : slots[i];
  for (const int s : ids) {
    if (s < 0 || s >= cfg.slots()) throw DimensionError("encode: slot out of range");
  }
  const Matrix pos = gather_rows(params.positions, ids);

  Matrix x = seq;
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    run_block(params.encoder[l], x, pos, {cfg.heads, static_cast<int>(l), nullptr, nullptr});
  }
  return x;
}

DecodeResult decode(const ModelParams& params, const Matrix& guidance, const TokenGrid& grid,
                    std::span<const int> unknown, std::span<const int> target,
                    const DecodeOptions& options) {
  const auto& cfg = params.config;
  if (guidance.rows() != static_cast<std::size_t>(cfg.text_tokens) ||
      guidance.cols() != static_cast<std::size_t>(cfg.dim)) {
    throw DimensionError("decode: guidance must be L x D");
  }
  if (grid.size() != cfg.image_tokens || grid.dim != cfg.image_dim()) {
    throw DimensionError("decode: grid does not match model");
  }
  std::vector<std::uint8_t> is_unknown(grid.size(), 0);
  for (const int u : unknown) {
    if (u < 0 || u >= grid.size()) throw ContractError("decode: unknown index out of range");
    is_unknown[u] = 1;
    if (!std::ranges::equal(grid.token(u), params.mask_token)) {
      throw ContractError("decode: unknown position " + std::to_string(u) +
                          " does not hold the mask embedding");
    }
  }
  for (const int t : target) {
    if (t < 0 || t >= grid.size() || !is_unknown[t]) {
      throw ContractError("decode: target position " + std::to_string(t) +
                          " is not in the unknown set");
    }
  }

  DecodeResult result;
  result.predictions = Matrix(target.size(), static_cast<std::size_t>(cfg.image_dim()));
  if (target.empty()) return result;

  const int L = cfg.text_tokens;
  Matrix x(static_cast<std::size_t>(cfg.slots()), cfg.dim);
  for (int i = 0; i < L; ++i) std::ranges::copy(guidance.row(i), x.row(i).begin());
  Matrix image(grid.size(), grid.dim);
  std::ranges::copy(grid.values, image.data().begin());
  const Matrix embedded = embed_image_tokens(params, image);
  for (int i = 0; i < grid.size(); ++i) std::ranges::copy(embedded.row(i), x.row(L + i).begin());

  for (std::size_t l = 0; l < params.decoder.size(); ++l) {
    run_block(params.decoder[l], x, params.positions,
              {cfg.heads, static_cast<int>(l), options.hook,
               options.capture ? &result.records : nullptr});
  }

  std::vector<int> rows(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) rows[i] = L + target[i];
  result.predictions = matmul(layer_norm(gather_rows(x, rows)), params.head);

  if (options.temperature > 0.0) {
    // Noise is keyed by position so target order does not matter.
    for (std::size_t i = 0; i < target.size(); ++i) {
      Rng rng(Rng::derive(options.noise_seed, static_cast<std::uint64_t>(target[i])));
      for (auto& v : result.predictions.row(i)) v += options.temperature * rng.normal();
    }
  }
  return result;
}

void normalize_min_max(std::span<double> values) {
  if (values.empty()) return;
  const auto [lo, hi] = std::ranges::minmax(values);
  const double range = hi - lo;
  for (auto& v : values) v = range > 0.0 ? (v - lo) / range : 0.0;
}

AttentionMaps attention_maps(std::span<const AttentionRecord> records, const MaskPlan& plan,
                             int text_tokens) {
  AttentionMaps maps;
  maps.rows = plan.rows;
  maps.cols = plan.cols;
  const int hw = plan.grid_tokens();
  maps.guidance.assign(hw, 0.0);
  maps.inpaint.assign(hw, 0.0);
  if (records.empty()) return maps;

  for (const auto& rec : records) {
    for (int pos = 0; pos < hw; ++pos) {
      const std::size_t col = static_cast<std::size_t>(text_tokens + pos);
      double g = 0.0;
      for (int i = 0; i < text_tokens; ++i) g += rec.weights(i, col);
      maps.guidance[pos] += g / text_tokens;
      if (!plan.inpaint.empty()) {
        double s = 0.0;
        for (const int r : plan.inpaint) s += rec.weights(text_tokens + r, col);
        maps.inpaint[pos] += s / static_cast<double>(plan.inpaint.size());
      }
    }
  }
  const auto count = static_cast<double>(records.size());
  for (auto& v : maps.guidance) v /= count;
  for (auto& v : maps.inpaint) v /= count;
  normalize_min_max(maps.guidance);
  normalize_min_max(maps.inpaint);
  return maps;
}

}  // namespace tp
