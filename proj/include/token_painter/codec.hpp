#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "token_painter/matrix.hpp"

namespace tp {

// Interleaved image with values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> values;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), values(static_cast<std::size_t>(w) * h * c, fill) {}

  double& at(int x, int y, int c) {
    return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c) const {
    return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool operator==(const Image&) const = default;
};

// H x W lattice of D-dimensional latent tokens.
struct TokenGrid {
  int rows = 0;
  int cols = 0;
  int dim = 0;
  std::vector<double> values;

  TokenGrid() = default;
  TokenGrid(int h, int w, int d)
      : rows(h), cols(w), dim(d), values(static_cast<std::size_t>(h) * w * d, 0.0) {}

  int size() const { return rows * cols; }

  std::span<double> token(int index) {
    return {values.data() + static_cast<std::size_t>(index) * dim, static_cast<std::size_t>(dim)};
  }
  std::span<const double> token(int index) const {
    return {values.data() + static_cast<std::size_t>(index) * dim, static_cast<std::size_t>(dim)};
  }

  bool operator==(const TokenGrid&) const = default;
};

// Orthonormal linear patch tokenizer. The patch vector (patch^2 * channels
// values, ordered dy, dx, channel) is lifted into D dimensions by the
// transpose of a projection whose rows are orthonormal, so decoding is an
// exact inverse on the patch subspace.
class Codec {
 public:
  Codec(int patch_size, int channels, int dim, std::uint64_t seed);

  int patch_size() const { return patch_; }
  int channels() const { return channels_; }
  int dim() const { return dim_; }
  int patch_values() const { return patch_ * patch_ * channels_; }

  // patch_values() x dim, rows orthonormal.
  const Matrix& projection() const { return projection_; }

  TokenGrid encode(const Image& img) const;
  Image decode(const TokenGrid& grid) const;

  bool operator==(const Codec&) const = default;

 private:
  int patch_;
  int channels_;
  int dim_;
  Matrix projection_;
};

}  // namespace tp
