#include "token_painter/deif.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "token_painter/errors.hpp"
#include "token_painter/fft.hpp"

namespace tp {

GuidanceTokens run_text_stream(const ModelParams& params, const Matrix& text) {
  if (text.rows() != static_cast<std::size_t>(params.config.text_tokens)) {
    throw DimensionError("text stream: expected " + std::to_string(params.config.text_tokens) +
                         " text tokens");
  }
  return {encode(params, text), GuidanceStream::gt};
}

GuidanceTokens run_context_stream(const ModelParams& params, const Matrix& text,
                                  const TokenGrid& grid, const StreamContext& ctx) {
  const int L = params.config.text_tokens;
  if (text.rows() != static_cast<std::size_t>(L)) {
    throw DimensionError("context stream: expected " + std::to_string(L) + " text tokens");
  }
  const std::size_t n_image = ctx.ring.size() + ctx.known_inpaint.size() + ctx.unknown.size();
  Matrix image(n_image, static_cast<std::size_t>(params.config.image_dim()));
  std::vector<int> slots(text.rows() + n_image);
  for (int i = 0; i < L; ++i) slots[i] = i;
  std::size_t r = 0;
  for (const auto group : {ctx.ring, ctx.known_inpaint}) {
    for (const int idx : group) {
      std::ranges::copy(grid.token(idx), image.row(r).begin());
      slots[L + r++] = L + idx;
    }
  }
  for (const int idx : ctx.unknown) {
    std::ranges::copy(params.mask_token, image.row(r).begin());
    slots[L + r++] = L + idx;
  }
  const Matrix embedded = embed_image_tokens(params, image);
  const Matrix* parts[] = {&text, &embedded};
  const Matrix seq = vstack(parts);
  const Matrix out = encode(params, seq, slots);
  Matrix head(L, out.cols());
  for (int i = 0; i < L; ++i) std::ranges::copy(out.row(i), head.row(i).begin());
  return {std::move(head), GuidanceStream::gb};
}

DualStreams run_dual_streams(const ModelParams& params, const Matrix& text, const TokenGrid& grid,
                             const StreamContext& ctx) {
  return {run_context_stream(params, text, grid, ctx), run_text_stream(params, text)};
}

AlignmentMode parse_alignment_mode(std::string_view name) {
  if (name == "corrected") return AlignmentMode::corrected;
  if (name == "as_written") return AlignmentMode::as_written;
  throw ConfigError("unknown alignment mode '" + std::string(name) + "'");
}

std::string_view to_string(AlignmentMode mode) {
  return mode == AlignmentMode::corrected ? "corrected" : "as_written";
}

ChannelStats channel_stats(const Matrix& tokens) {
  const std::size_t L = tokens.rows(), D = tokens.cols();
  ChannelStats s{std::vector<double>(D, 0.0), std::vector<double>(D, 0.0)};
  if (L == 0) return s;
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t d = 0; d < D; ++d) s.mean[d] += tokens(l, d);
  for (auto& m : s.mean) m /= static_cast<double>(L);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t d = 0; d < D; ++d) {
      const double e = tokens(l, d) - s.mean[d];
      s.stddev[d] += e * e;
    }
  }
  for (auto& v : s.stddev) v = std::sqrt(v / static_cast<double>(L));
  return s;
}

AlignedStreams align_streams(const Matrix& gb, const Matrix& gt, double a, AlignmentMode mode,
                             double eps) {
  if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("alignment mix a must lie in [0, 1]");
  if (gb.rows() != gt.rows() || gb.cols() != gt.cols()) {
    throw DimensionError("align_streams: stream shapes differ");
  }
  auto sb = channel_stats(gb);
  auto st = channel_stats(gt);
  const std::size_t D = gb.cols();
  AlignedStreams out{Matrix(gb.rows(), D), Matrix(gt.rows(), D),
                     {std::vector<double>(D), std::vector<double>(D), a}};
  for (std::size_t d = 0; d < D; ++d) {
    sb.stddev[d] = std::max(sb.stddev[d], eps);
    st.stddev[d] = std::max(st.stddev[d], eps);
    out.stats.mean_mix[d] = a * sb.mean[d] + (1.0 - a) * st.mean[d];
    out.stats.std_mix[d] = a * sb.stddev[d] + (1.0 - a) * st.stddev[d];
  }
  const auto apply = [&](const Matrix& in, const ChannelStats& s, Matrix& dst) {
    for (std::size_t l = 0; l < in.rows(); ++l) {
      for (std::size_t d = 0; d < D; ++d) {
        const double z = (in(l, d) - s.mean[d]) / s.stddev[d];
        dst(l, d) = mode == AlignmentMode::corrected
                        ? out.stats.std_mix[d] * z + out.stats.mean_mix[d]
                        : out.stats.mean_mix[d] * z + out.stats.std_mix[d];
      }
    }
  };
  apply(gb, sb, out.gb);
  apply(gt, st, out.gt);
  return out;
}

FusionKind parse_fusion_kind(std::string_view name) {
  if (name == "m_gaussian" || name == "m-gaussian") return FusionKind::m_gaussian;
  if (name == "linear") return FusionKind::linear;
  if (name == "constant") return FusionKind::constant;
  if (name == "quadratic") return FusionKind::quadratic;
  throw ConfigError("unknown fusion kind '" + std::string(name) + "'");
}

std::string_view to_string(FusionKind kind) {
  switch (kind) {
    case FusionKind::m_gaussian: return "m_gaussian";
    case FusionKind::linear: return "linear";
    case FusionKind::constant: return "constant";
    case FusionKind::quadratic: return "quadratic";
  }
  return "?";
}

FusionWeights fusion_weights(int length, FusionKind kind, double phi, double tau) {
  if (length < 2) throw ConfigError("fusion weights need L >= 2");
  if (!(phi > 0.0 && tau > 0.0)) {
    throw ConfigError("fusion weights need phi > 0 and tau > 0");
  }
  FusionWeights fw{std::vector<double>(length), kind, phi, tau};
  const int center = length / 2;
  const double half = length / 2.0;
  for (int l = 0; l < length; ++l) {
    const double dist = std::abs(l - center);
    double w = 0.0;
    switch (kind) {
      case FusionKind::m_gaussian: w = std::exp(-std::pow(dist / phi, tau)); break;
      case FusionKind::linear: w = std::max(0.0, 1.0 - dist / half); break;
      case FusionKind::constant: w = dist < length / 4.0 ? 1.0 : 0.0; break;
      case FusionKind::quadratic: w = std::max(0.0, 1.0 - (dist / half) * (dist / half)); break;
    }
    fw.w[l] = w;
  }
  return fw;
}

FusedGuidance frequency_fuse(const Matrix& gb, const Matrix& gt, std::span<const double> weights) {
  if (gb.rows() != gt.rows() || gb.cols() != gt.cols()) {
    throw DimensionError("frequency_fuse: stream shapes differ");
  }
  if (weights.size() != gb.rows()) throw DimensionError("frequency_fuse: weight length != L");
  const std::size_t L = gb.rows(), D = gb.cols();
  FusedGuidance out{Matrix(L, D), 0.0};
  std::vector<fft::Complex> xb(L), xt(L);
  double max_imag = 0.0, max_spec = 0.0;
  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t l = 0; l < L; ++l) {
      xb[l] = gb(l, d);
      xt[l] = gt(l, d);
    }
    const auto fb = fft::shift(fft::forward(xb));
    const auto ft = fft::shift(fft::forward(xt));
    std::vector<fft::Complex> mixed(L);
    for (std::size_t l = 0; l < L; ++l) {
      mixed[l] = (1.0 - weights[l]) * fb[l] + weights[l] * ft[l];
      max_spec = std::max(max_spec, std::abs(mixed[l]));
    }
    const auto back = fft::inverse(fft::unshift(mixed));
    for (std::size_t l = 0; l < L; ++l) {
      out.tokens(l, d) = back[l].real();
      max_imag = std::max(max_imag, std::abs(back[l].imag()));
    }
  }
  out.imag_residual = max_spec > 0.0 ? max_imag / max_spec : 0.0;
  return out;
}

}  // namespace tp
