#include "clam/heatmap.hpp"

#include "clam/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace clam {

HeatmapGrid::HeatmapGrid(int w, int h, int ds) : width(w), height(h), downsample(ds) {
  if (w <= 0 || h <= 0) throw Error(ErrorKind::Dimension, "heatmap grid dimensions must be positive");
  if (ds < 1) throw Error(ErrorKind::Config, "heatmap downsample must be at least 1");
  score_sum.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0);
  hit_count.assign(score_sum.size(), 0);
}

std::vector<double> percentile_normalize(std::span<const double> raw, std::span<const double> reference) {
  if (reference.empty()) throw Error(ErrorKind::Dimension, "percentile reference must be non-empty");
  for (double v : reference) {
    if (!std::isfinite(v)) throw Error(ErrorKind::Numeric, "non-finite reference score");
  }
  std::vector<double> out(raw.size(), 0.5);
  if (reference.size() == 1) return out;
  std::vector<double> sorted(reference.begin(), reference.end());
  std::sort(sorted.begin(), sorted.end());
  const double denom = static_cast<double>(sorted.size() - 1);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) throw Error(ErrorKind::Numeric, "non-finite attention score");
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), raw[i]) - sorted.begin();
    const auto hi = std::upper_bound(sorted.begin(), sorted.end(), raw[i]) - sorted.begin();
    const double rank = static_cast<double>(lo + hi - 1) / 2.0;
    out[i] = std::clamp(rank / denom, 0.0, 1.0);
  }
  return out;
}

void accumulate(HeatmapGrid& grid, std::array<std::int32_t, 2> coord, int patch_size, double score) {
  const auto ds = static_cast<std::int64_t>(grid.downsample);
  auto floor_div = [](std::int64_t a, std::int64_t b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  const std::int64_t x0 = std::max<std::int64_t>(0, floor_div(coord[0], ds));
  const std::int64_t y0 = std::max<std::int64_t>(0, floor_div(coord[1], ds));
  const std::int64_t x1 = std::min<std::int64_t>(grid.width, -floor_div(-(coord[0] + std::int64_t{patch_size}), ds));
  const std::int64_t y1 = std::min<std::int64_t>(grid.height, -floor_div(-(coord[1] + std::int64_t{patch_size}), ds));
  for (std::int64_t y = y0; y < y1; ++y) {
    for (std::int64_t x = x0; x < x1; ++x) {
      const std::size_t i = grid.index(static_cast<int>(x), static_cast<int>(y));
      grid.score_sum[i] += score;
      grid.hit_count[i] += 1;
    }
  }
}

std::array<double, 3> colormap(double value) {
  constexpr std::array<double, 3> lo{59, 76, 192}, mid{221, 221, 221}, hi{180, 4, 38};
  const double v = std::clamp(value, 0.0, 1.0);
  std::array<double, 3> out{};
  if (v <= 0.5) {
    const double t = v / 0.5;
    for (int c = 0; c < 3; ++c) out[c] = lo[c] + t * (mid[c] - lo[c]);
  } else {
    const double t = (v - 0.5) / 0.5;
    for (int c = 0; c < 3; ++c) out[c] = mid[c] + t * (hi[c] - mid[c]);
  }
  return out;
}

RgbImage render(const HeatmapGrid& grid, const std::optional<RgbImage>& base, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::Config, "alpha must lie in [0, 1]");
  if (base && (base->width != grid.width || base->height != grid.height)) {
    throw Error(ErrorKind::Dimension, "base image size differs from heatmap grid");
  }
  RgbImage out = base ? *base : RgbImage(grid.width, grid.height);
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      if (!grid.covered(x, y)) continue;
      const auto heat = colormap(grid.value(x, y));
      const auto under = out.at(x, y);
      std::array<std::uint8_t, 3> px{};
      for (int c = 0; c < 3; ++c) {
        const double blended = base ? alpha * heat[c] + (1.0 - alpha) * under[c] : heat[c];
        px[c] = static_cast<std::uint8_t>(std::clamp(std::floor(blended + 0.5), 0.0, 255.0));
      }
      out.set(x, y, px);
    }
  }
  return out;
}

std::string format_patch_scores(std::span<const PatchScore> scores) {
  std::string out = "coord_x,coord_y,raw,normalized\n";
  char buf[128];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", s.coord[0], s.coord[1], s.raw, s.normalized);
    out += buf;
  }
  return out;
}

}  // namespace clam
