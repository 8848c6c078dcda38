#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "token_painter/codec.hpp"
#include "token_painter/lattice.hpp"
#include "token_painter/matrix.hpp"

namespace tp::io {

// Binary PPM (P6) or PGM (P5), maxval <= 255.
Image read_image(const std::filesystem::path& path);
// Writes P6 for 3 channels, P5 for 1; values are clamped and rounded.
void write_image(const std::filesystem::path& path, const Image& img);

// PGM thresholded at 128, or a CSV grid of 0/1 values.
PixelMask read_mask(const std::filesystem::path& path);
void write_mask_pgm(const std::filesystem::path& path, const PixelMask& mask);

// 16-bit PGM heatmap of values in [0, 1].
void write_heatmap(const std::filesystem::path& path, int rows, int cols,
                   std::span<const double> values);
void write_grid_csv(const std::filesystem::path& path, int rows, int cols,
                    std::span<const double> values);

enum class DType { f32le, f64le };

struct Tensor {
  std::vector<std::size_t> shape;
  DType dtype = DType::f64le;
  std::vector<double> values;
};

// Payload at `path`, JSON descriptor at `path` + ".json".
void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

Tensor to_tensor(const TokenGrid& grid);
Tensor to_tensor(const Matrix& m);
Matrix to_matrix(const Tensor& t);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace tp::io
