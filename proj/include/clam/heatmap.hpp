#pragma once

#include "clam/bag.hpp"
#include "clam/image.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clam {

// Accumulator on the render grid (one cell per downsample x downsample block
// of the full-resolution slide).
struct HeatmapGrid {
  int width = 0;
  int height = 0;
  int downsample = 1;
  std::vector<double> score_sum;
  std::vector<std::int64_t> hit_count;

  HeatmapGrid() = default;
  HeatmapGrid(int w, int h, int downsample = 1);

  bool covered(int x, int y) const { return hit_count[index(x, y)] > 0; }
  /// Mean score; only meaningful where covered.
  double value(int x, int y) const { return score_sum[index(x, y)] / static_cast<double>(hit_count[index(x, y)]); }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + x; }
};

/// Percentile rank of each raw score within reference: the mean of the
/// 0-based ranks of its tied block divided by |reference| - 1. Scores not in
/// the reference get the midpoint of their insertion gap, clamped to [0, 1].
/// A single-element reference maps everything to 0.5.
std::vector<double> percentile_normalize(std::span<const double> raw, std::span<const double> reference);

/// Adds score over the footprint of a patch at full-resolution (x, y) with
/// side patch_size: cells floor(x/ds) .. ceil((x+size)/ds) - 1, clipped.
void accumulate(HeatmapGrid& grid, std::array<std::int32_t, 2> coord, int patch_size, double score);

/// Diverging map: 0 -> (59,76,192), 0.5 -> (221,221,221), 1 -> (180,4,38),
/// piecewise linear per channel, value clamped to [0, 1]. Unrounded.
std::array<double, 3> colormap(double value);

/// Covered cells: alpha * colour + (1 - alpha) * base, rounded half-up once.
/// Uncovered cells keep the base (white when no base is given).
RgbImage render(const HeatmapGrid& grid, const std::optional<RgbImage>& base, double alpha = 0.5);

struct PatchScore {
  std::array<std::int32_t, 2> coord;
  double raw = 0.0;
  double normalized = 0.0;
};

/// "coord_x,coord_y,raw,normalized" with a header line.
std::string format_patch_scores(std::span<const PatchScore> scores);

}  // namespace clam
