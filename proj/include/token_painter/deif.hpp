#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "token_painter/codec.hpp"
#include "token_painter/matrix.hpp"
#include "token_painter/refmodel.hpp"

namespace tp {

enum class GuidanceStream { raw, gb, gt, fused };

// L x D guidance tokens tagged with the stream that produced them.
struct GuidanceTokens {
  Matrix values;
  GuidanceStream stream = GuidanceStream::raw;
};

// Image context fed to the text-and-background stream. All indices are flat
// lattice positions.
struct StreamContext {
  std::span<const int> ring;           // selected background ring
  std::span<const int> known_inpaint;  // inpainting tokens already predicted
  std::span<const int> unknown;        // still-unknown inpainting tokens
};

// Text-only stream: encoder over the raw text tokens alone. Its input never
// changes during a run, so callers compute it once.
GuidanceTokens run_text_stream(const ModelParams& params, const Matrix& text);

// Text-and-background stream: encoder over text, ring tokens, predicted
// inpainting tokens and one mask embedding per unknown position; the first
// L rows are kept.
GuidanceTokens run_context_stream(const ModelParams& params, const Matrix& text,
                                  const TokenGrid& grid, const StreamContext& ctx);

struct DualStreams {
  GuidanceTokens gb;
  GuidanceTokens gt;
};

DualStreams run_dual_streams(const ModelParams& params, const Matrix& text, const TokenGrid& grid,
                             const StreamContext& ctx);

enum class AlignmentMode { corrected, as_written };

AlignmentMode parse_alignment_mode(std::string_view name);
std::string_view to_string(AlignmentMode mode);

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population, along L
};

ChannelStats channel_stats(const Matrix& tokens);

struct AlignmentStats {
  std::vector<double> mean_mix;  // a * mu(gb) + (1 - a) * mu(gt)
  std::vector<double> std_mix;   // a * sigma(gb) + (1 - a) * sigma(gt)
  double a = 0.0;
};

struct AlignedStreams {
  Matrix gb;
  Matrix gt;
  AlignmentStats stats;
};

inline constexpr double kStdFloor = 1e-6;

// corrected: T' = std_mix * (T - mu) / sigma + mean_mix
// as_written: T' = mean_mix * (T - mu) / sigma + std_mix
AlignedStreams align_streams(const Matrix& gb, const Matrix& gt, double a, AlignmentMode mode,
                             double eps = kStdFloor);

enum class FusionKind { m_gaussian, linear, constant, quadratic };

FusionKind parse_fusion_kind(std::string_view name);
std::string_view to_string(FusionKind kind);

struct FusionWeights {
  std::vector<double> w;
  FusionKind kind = FusionKind::m_gaussian;
  double phi = 0.0;
  double tau = 0.0;
};

// Weight given to the text-only spectrum at each shifted bin. Profiles are
// centered on the zero-frequency bin of the shifted spectrum (index L/2,
// rounded down for odd L) and fall off symmetrically.
FusionWeights fusion_weights(int length, FusionKind kind, double phi, double tau);

struct FusedGuidance {
  Matrix tokens;
  // max |imag(IFFT)| relative to the largest spectral magnitude.
  double imag_residual = 0.0;
};

// Per channel: shift(FFT(gb)), shift(FFT(gt)), mix as (1 - w) F_gb + w F_gt,
// unshift, IFFT, keep the real part.
FusedGuidance frequency_fuse(const Matrix& gb, const Matrix& gt, std::span<const double> weights);

}  // namespace tp
