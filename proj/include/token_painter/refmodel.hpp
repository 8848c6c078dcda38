#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "token_painter/codec.hpp"
#include "token_painter/lattice.hpp"
#include "token_painter/matrix.hpp"

namespace tp {

struct ModelConfig {
  int dim = 32;        // model width D
  int token_dim = 0;   // image token width; 0 means same as dim
  int heads = 4;
  int enc_layers = 2;
  int dec_layers = 2;
  int text_tokens = 16;   // L
  int image_tokens = 64;  // HW
  int ffn_mult = 2;
  std::uint64_t seed = 0;

  int head_dim() const { return dim / heads; }
  int image_dim() const { return token_dim > 0 ? token_dim : dim; }
  int slots() const { return text_tokens + image_tokens; }
};

struct Block {
  Matrix wq, wk, wv, wo;  // dim x dim
  Matrix w1;              // dim x ffn
  Matrix w2;              // ffn x dim
};

struct ModelParams {
  ModelConfig config;
  std::vector<Block> encoder;
  std::vector<Block> decoder;
  Matrix positions;                // slots x dim
  Matrix embed;                    // image_dim x dim, image token -> model width
  std::vector<double> mask_token;  // image_dim; stand-in for every unknown image token
  Matrix head;                     // dim x image_dim regression head
};

// Captured attention of one (layer, head). `logits` is QK^T / sqrt(D') after
// any hook has run; `weights` is its row softmax.
struct AttentionRecord {
  int layer = 0;
  int head = 0;
  Matrix logits;
  Matrix weights;
};

// Mutates pre-softmax logits of one decoder (layer, head) in place.
using LogitHook = std::function<void(int layer, int head, Matrix& logits)>;

struct DecodeOptions {
  const LogitHook* hook = nullptr;
  bool capture = false;
  double temperature = 0.0;
  std::uint64_t noise_seed = 0;
};

struct DecodeResult {
  Matrix predictions;  // |target| x image_dim, in target order
  std::vector<AttentionRecord> records;
};

ModelParams init_model(const ModelConfig& cfg);

// Maps image tokens (rows of width image_dim) to model width.
Matrix embed_image_tokens(const ModelParams& params, const Matrix& tokens);

// Runs the encoder stack. `slots` gives each row's positional slot
// (0..L-1 for guidance, L + flat index for image tokens); empty means 0..n-1.
Matrix encode(const ModelParams& params, const Matrix& seq, std::span<const int> slots = {});

// Predicts the tokens at `target` (flat image indices, subset of `unknown`)
// from the guidance rows and the full grid. The grid is not modified.
DecodeResult decode(const ModelParams& params, const Matrix& guidance, const TokenGrid& grid,
                    std::span<const int> unknown, std::span<const int> target,
                    const DecodeOptions& options = {});

struct AttentionMaps {
  int rows = 0;
  int cols = 0;
  std::vector<double> guidance;  // attention received from guidance rows
  std::vector<double> inpaint;   // attention received from inpainting rows
};

// Per-image-position attention averaged over records, min-max normalized.
AttentionMaps attention_maps(std::span<const AttentionRecord> records, const MaskPlan& plan,
                             int text_tokens);

void normalize_min_max(std::span<double> values);

}  // namespace tp
