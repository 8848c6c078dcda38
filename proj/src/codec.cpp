#include "token_painter/codec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "token_painter/errors.hpp"
#include "token_painter/rng.hpp"

namespace tp {

namespace {

// Modified Gram-Schmidt with one re-orthogonalization pass per row.
// Redraws a row if it collapses (probability zero for Gaussian draws).
Matrix orthonormal_rows(int rows, int cols, Rng& rng) {
  Matrix q(rows, cols);
  for (int r = 0; r < rows; ++r) {
    auto v = q.row(r);
    for (;;) {
      for (auto& x : v) x = rng.normal();
      for (int pass = 0; pass < 2; ++pass) {
        for (int p = 0; p < r; ++p) {
          const auto u = q.row(p);
          double dot = 0.0;
          for (int c = 0; c < cols; ++c) dot += u[c] * v[c];
          for (int c = 0; c < cols; ++c) v[c] -= dot * u[c];
        }
      }
      double norm = 0.0;
      for (const double x : v) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 1e-8) {
        for (auto& x : v) x /= norm;
        break;
      }
    }
  }
  return q;
}

}  // namespace

Codec::Codec(int patch_size, int channels, int dim, std::uint64_t seed)
    : patch_(patch_size), channels_(channels), dim_(dim) {
  if (patch_size <= 0) throw ConfigError("codec: patch_size must be positive");
  if (channels != 1 && channels != 3) throw ConfigError("codec: channels must be 1 or 3");
  if (dim < patch_values()) {
    throw ConfigError("codec: token dim " + std::to_string(dim) + " < patch values " +
                      std::to_string(patch_values()));
  }
  Rng rng(Rng::derive(seed, 0xc0dec));
  projection_ = orthonormal_rows(patch_values(), dim, rng);
}

TokenGrid Codec::encode(const Image& img) const {
  if (img.channels != channels_) throw DimensionError("codec: channel count mismatch");
  if (img.width <= 0 || img.height <= 0 || img.width % patch_ != 0 || img.height % patch_ != 0) {
    throw DimensionError("codec: image " + std::to_string(img.width) + "x" +
                         std::to_string(img.height) + " is not divisible by patch size " +
                         std::to_string(patch_));
  }
  TokenGrid grid(img.height / patch_, img.width / patch_, dim_);
  std::vector<double> patch(patch_values());
  for (int h = 0; h < grid.rows; ++h) {
    for (int w = 0; w < grid.cols; ++w) {
      int k = 0;
      for (int dy = 0; dy < patch_; ++dy)
        for (int dx = 0; dx < patch_; ++dx)
          for (int c = 0; c < channels_; ++c) patch[k++] = img.at(w * patch_ + dx, h * patch_ + dy, c);
      auto token = grid.token(h * grid.cols + w);
      for (int i = 0; i < patch_values(); ++i) {
        const double s = patch[i];
        if (s == 0.0) continue;
        const auto basis = projection_.row(i);
        for (int d = 0; d < dim_; ++d) token[d] += s * basis[d];
      }
    }
  }
  return grid;
}

Image Codec::decode(const TokenGrid& grid) const {
  if (grid.dim != dim_) throw DimensionError("codec: token dim mismatch");
  Image img(grid.cols * patch_, grid.rows * patch_, channels_);
  for (int h = 0; h < grid.rows; ++h) {
    for (int w = 0; w < grid.cols; ++w) {
      const auto token = grid.token(h * grid.cols + w);
      int k = 0;
      for (int dy = 0; dy < patch_; ++dy) {
        for (int dx = 0; dx < patch_; ++dx) {
          for (int c = 0; c < channels_; ++c) {
            const auto basis = projection_.row(k++);
            double v = 0.0;
            for (int d = 0; d < dim_; ++d) v += basis[d] * token[d];
            img.at(w * patch_ + dx, h * patch_ + dy, c) = std::clamp(v, 0.0, 1.0);
          }
        }
      }
    }
  }
  return img;
}

}  // namespace tp
