#include "token_painter/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "token_painter/errors.hpp"
#include "token_painter/rng.hpp"

namespace tp {

int BinaryGrid::count() const {
  return static_cast<int>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "cosine") return ScheduleKind::cosine;
  if (name == "uniform") return ScheduleKind::uniform;
  throw ConfigError("unknown schedule kind '" + std::string(name) + "'");
}

std::string_view to_string(ScheduleKind kind) {
  return kind == ScheduleKind::cosine ? "cosine" : "uniform";
}

BinaryGrid downsample_mask(const PixelMask& pm, int patch_size) {
  if (patch_size <= 0) throw ConfigError("patch_size must be positive");
  if (pm.rows <= 0 || pm.cols <= 0 || pm.rows % patch_size != 0 || pm.cols % patch_size != 0) {
    throw DimensionError("mask " + std::to_string(pm.cols) + "x" + std::to_string(pm.rows) +
                         " is not divisible by patch size " + std::to_string(patch_size));
  }
  BinaryGrid out(pm.rows / patch_size, pm.cols / patch_size);
  for (int y = 0; y < pm.rows; ++y) {
    for (int x = 0; x < pm.cols; ++x) {
      if (pm.at(y, x)) out.set(y / patch_size, x / patch_size, true);
    }
  }
  return out;
}

BinaryGrid dilate_mask(const BinaryGrid& mask, int radius) {
  if (radius < 0) throw ConfigError("dilation radius must be nonnegative");
  BinaryGrid out(mask.rows, mask.cols);
  for (int r = 0; r < mask.rows; ++r) {
    for (int c = 0; c < mask.cols; ++c) {
      if (!mask.at(r, c)) continue;
      const int r0 = std::max(0, r - radius), r1 = std::min(mask.rows - 1, r + radius);
      const int c0 = std::max(0, c - radius), c1 = std::min(mask.cols - 1, c + radius);
      for (int rr = r0; rr <= r1; ++rr)
        for (int cc = c0; cc <= c1; ++cc) out.set(rr, cc, true);
    }
  }
  return out;
}

namespace {

// Chebyshev distance to the nearest set cell, by 8-connected BFS.
std::vector<int> distance_to_mask(const BinaryGrid& mask) {
  const int n = mask.rows * mask.cols;
  std::vector<int> dist(n, std::numeric_limits<int>::max());
  std::deque<int> queue;
  for (int i = 0; i < n; ++i) {
    if (mask.bits[i]) {
      dist[i] = 0;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    const int r = i / mask.cols, c = i % mask.cols;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int rr = r + dr, cc = c + dc;
        if (rr < 0 || cc < 0 || rr >= mask.rows || cc >= mask.cols) continue;
        const int j = rr * mask.cols + cc;
        if (dist[j] > dist[i] + 1) {
          dist[j] = dist[i] + 1;
          queue.push_back(j);
        }
      }
    }
  }
  return dist;
}

}  // namespace

MaskPlan build_mask_plan(const BinaryGrid& token_mask, int dilation_radius) {
  MaskPlan plan;
  plan.rows = token_mask.rows;
  plan.cols = token_mask.cols;
  plan.token_mask = token_mask;
  plan.dilated_mask = dilate_mask(token_mask, dilation_radius);
  const int n = plan.grid_tokens();
  for (int i = 0; i < n; ++i) {
    (token_mask.bits[i] ? plan.inpaint : plan.background).push_back(i);
    if (plan.dilated_mask.bits[i] && !token_mask.bits[i]) plan.ring.push_back(i);
  }
  if (!plan.inpaint.empty()) {
    const auto dist = distance_to_mask(token_mask);
    std::ranges::stable_sort(plan.ring, [&](int a, int b) { return dist[a] < dist[b]; });
  }
  return plan;
}

std::vector<int> select_context_ring(const MaskPlan& plan, double p, int n) {
  if (p < 0.0) throw ConfigError("ring ratio p must be nonnegative");
  const double budget = std::floor(p * static_cast<double>(n));
  const auto take = static_cast<std::size_t>(
      std::min(budget, static_cast<double>(plan.ring.size())));
  return {plan.ring.begin(), plan.ring.begin() + static_cast<std::ptrdiff_t>(take)};
}

std::vector<int> schedule_sizes(int n, int steps, ScheduleKind kind) {
  if (steps <= 0) throw ScheduleError("schedule needs at least one step");
  if (steps > n) {
    throw ScheduleError("cannot split " + std::to_string(n) + " tokens into " +
                        std::to_string(steps) + " nonempty steps");
  }
  std::vector<int> sizes(steps);
  if (kind == ScheduleKind::uniform) {
    for (int k = 0; k < steps; ++k) sizes[k] = n / steps + (k < n % steps ? 1 : 0);
    return sizes;
  }
  // Cumulative count after step k is ceil(n * (1 - cos(pi k / 2K))), then
  // nudged so every step keeps at least one token.
  std::vector<int> cum(steps + 1, 0);
  for (int k = 1; k < steps; ++k) {
    const double frac = 1.0 - std::cos(std::numbers::pi * k / (2.0 * steps));
    cum[k] = static_cast<int>(std::ceil(n * frac - 1e-9));
  }
  cum[steps] = n;
  for (int k = 1; k <= steps; ++k) cum[k] = std::max(cum[k], cum[k - 1] + 1);
  cum[steps] = n;
  for (int k = steps - 1; k >= 1; --k) cum[k] = std::min(cum[k], cum[k + 1] - 1);
  for (int k = 0; k < steps; ++k) sizes[k] = cum[k + 1] - cum[k];
  return sizes;
}

StepSchedule build_schedule(std::span<const int> inpaint, int steps, std::uint64_t seed,
                            ScheduleKind kind) {
  const auto sizes = schedule_sizes(static_cast<int>(inpaint.size()), steps, kind);
  std::vector<int> order(inpaint.begin(), inpaint.end());
  Rng rng(Rng::derive(seed, 0x5c4ed));
  rng.shuffle(std::span<int>(order));

  StepSchedule schedule;
  auto it = order.begin();
  for (const int size : sizes) {
    std::vector<int> set(it, it + size);
    std::ranges::sort(set);
    schedule.sets.push_back(std::move(set));
    it += size;
  }
  return schedule;
}

}  // namespace tp
