#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "token_painter/codec.hpp"
#include "token_painter/config.hpp"
#include "token_painter/deif.hpp"
#include "token_painter/lattice.hpp"
#include "token_painter/refmodel.hpp"

namespace tp {

// Raw text tokens for a prompt: seeded uniform(-1, 1) draws keyed by a
// stable hash of the text and the run seed.
Matrix prompt_tokens(std::string_view prompt, int text_tokens, int dim, std::uint64_t seed);

struct StepRecord {
  int step = 0;
  int set_size = 0;
  int unknown = 0;    // N1
  int predicted = 0;  // N2
  double alpha = 1.0;
  std::optional<double> beta;  // undefined on the first step
  double imag_residual = 0.0;
  double millis = 0.0;
};

struct RunReport {
  int grid_rows = 0;
  int grid_cols = 0;
  int inpaint_count = 0;
  int ring_count = 0;
  std::vector<StepRecord> steps;
  double imag_residual_max = 0.0;
  std::optional<double> background_psnr;  // +inf when the background is exact
  double mass_on_guidance = 0.0;
  double mass_on_inpaint = 0.0;
  double total_millis = 0.0;
};

struct InpaintResult {
  Image image;
  TokenGrid tokens;
  TokenGrid source_tokens;
  MaskPlan plan;
  RunReport report;
  std::vector<AttentionRecord> records;
  AttentionMaps maps;
};

struct GuidanceResult {
  Matrix tokens;
  double imag_residual = 0.0;
};

// Guidance for one step given both encoder streams.
GuidanceResult compose_guidance(Mode mode, const DualStreams& streams,
                                const FusionWeights& weights, double align_mix,
                                AlignmentMode alignment);

InpaintResult inpaint(const Image& img, const PixelMask& pm, const Matrix& text,
                      const RunConfig& cfg);

// PSNR (peak 1.0) over pixels of background-token patches only. Returns
// +infinity when those pixels match exactly.
double background_psnr(const Image& original, const Image& result, const MaskPlan& plan,
                       int patch_size);

struct AttentionMass {
  double guidance = 0.0;
  double inpaint = 0.0;
};

// Mean post-softmax weight from inpainting query rows onto guidance columns
// and onto inpainting columns.
AttentionMass attention_mass(std::span<const AttentionRecord> records, const MaskPlan& plan,
                             int text_tokens);

// Wall-clock fields are omitted unless requested so reruns serialize
// byte-identically.
nlohmann::ordered_json to_json(const RunReport& report, bool include_timing = false);

// Smooth synthetic test scene and a centered rectangular hole.
Image demo_image(int width, int height, int channels, std::uint64_t seed);
PixelMask demo_mask(int width, int height, int x0, int y0, int x1, int y1);

}  // namespace tp
