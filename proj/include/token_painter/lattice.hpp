#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace tp {

// Binary H x W grid, row-major. Used for both pixel masks and token masks.
struct BinaryGrid {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> bits;

  BinaryGrid() = default;
  BinaryGrid(int r, int c) : rows(r), cols(c), bits(static_cast<std::size_t>(r) * c, 0) {}

  std::uint8_t at(int r, int c) const { return bits[static_cast<std::size_t>(r) * cols + c]; }
  void set(int r, int c, bool v) { bits[static_cast<std::size_t>(r) * cols + c] = v ? 1 : 0; }
  int count() const;

  bool operator==(const BinaryGrid&) const = default;
};

// Pixel-resolution mask; 1 marks pixels to regenerate.
using PixelMask = BinaryGrid;

// Token positions are flat row-major indices h * W + w into the lattice.
struct MaskPlan {
  int rows = 0;
  int cols = 0;
  BinaryGrid token_mask;
  BinaryGrid dilated_mask;
  std::vector<int> inpaint;     // I_p, row-major
  std::vector<int> background;  // I_b, row-major
  // Dilated-minus-original band, nearest-to-mask first (Chebyshev distance),
  // ties broken by row-major index.
  std::vector<int> ring;

  int grid_tokens() const { return rows * cols; }
};

struct StepSchedule {
  std::vector<std::vector<int>> sets;

  int steps() const { return static_cast<int>(sets.size()); }
};

enum class ScheduleKind { cosine, uniform };

ScheduleKind parse_schedule_kind(std::string_view name);
std::string_view to_string(ScheduleKind kind);

// Token (h, w) is set iff any pixel of its patch is set.
BinaryGrid downsample_mask(const PixelMask& pm, int patch_size);

// Chebyshev dilation clipped at the borders.
BinaryGrid dilate_mask(const BinaryGrid& mask, int radius);

MaskPlan build_mask_plan(const BinaryGrid& token_mask, int dilation_radius);

// First min(floor(p * n), |ring|) ring tokens.
std::vector<int> select_context_ring(const MaskPlan& plan, double p, int n);

// Set sizes for the given kind; exposed separately for testing.
std::vector<int> schedule_sizes(int n, int steps, ScheduleKind kind);

StepSchedule build_schedule(std::span<const int> inpaint, int steps, std::uint64_t seed,
                            ScheduleKind kind);

}  // namespace tp
