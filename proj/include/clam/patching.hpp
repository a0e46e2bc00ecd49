#pragma once

#include "clam/image.hpp"
#include "clam/segmentation.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace clam {

struct PatchGrid {
  int patch_size = 256;
  int step = 256;
  std::string magnification = "20x";
  std::vector<std::array<std::int32_t, 2>> coords;  // top-left corners, full resolution

  friend bool operator==(const PatchGrid&, const PatchGrid&) = default;
};

/// step = max(1, floor(patch_size * (1 - overlap))). Candidate corners run
/// over x, y = 0, step, ... with the patch fully inside the source image; a
/// corner is kept when the patch centre falls inside a retained (hole-filled)
/// contour. Row-major: y outer, x inner.
PatchGrid extract_patch_grid(const SegmentationMask& mask, int patch_size = 256, double overlap = 0.0);

int patch_step(int patch_size, double overlap);

// Text form:
//   patch_size=256 step=256 magnification=20x count=N
//   x,y
//   ...
std::string format_patch_grid(const PatchGrid& grid);
PatchGrid parse_patch_grid(const std::string& text);

}  // namespace clam
