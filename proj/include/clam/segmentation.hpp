#pragma once

#include "clam/image.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace clam {

struct SegParams {
  int downsample = 32;      // image is box-averaged by this factor before segmentation
  int sat_threshold = 8;    // foreground where blurred saturation > threshold (0..255)
  int median_kernel = 7;    // odd
  int close_kernel = 4;     // square structuring element side
  std::int64_t min_area = 512;  // contours smaller than this (mask pixels) are dropped

  void validate() const;
};

struct Contour {
  std::vector<std::array<int, 2>> polygon;  // outer boundary pixels, clockwise, mask coordinates
  std::int64_t area = 0;                    // pixel count of the connected component
  std::array<int, 4> bbox{};                // x0, y0, x1, y1 (exclusive)
};

/// Binary tissue mask on the downsampled grid.
struct SegmentationMask {
  int width = 0;   // mask grid
  int height = 0;
  int downsample = 1;
  int full_width = 0;  // source image before downsampling
  int full_height = 0;
  std::vector<std::uint8_t> mask;    // retained components (1 = tissue)
  std::vector<std::uint8_t> filled;  // retained components with enclosed holes filled
  std::vector<Contour> contours;

  bool at(int x, int y) const { return mask[static_cast<std::size_t>(y) * width + x] != 0; }
  bool inside(int x, int y) const { return filled[static_cast<std::size_t>(y) * width + x] != 0; }
  bool empty() const { return contours.empty(); }
};

/// OpenCV-style 8-bit HSV saturation: round(255 * (max - min) / max), 0 for black.
std::vector<std::uint8_t> saturation_channel(const RgbImage& image);

/// Median filter with an odd square window, replicated borders.
std::vector<std::uint8_t> median_blur(const std::vector<std::uint8_t>& channel, int width, int height, int kernel);

/// Dilation then erosion with a k x k square. The dilation window spans
/// offsets [-k/2, k-1-k/2]; erosion uses the reflected window so the result
/// always contains the input. Outside the image counts as background for
/// dilation and foreground for erosion.
std::vector<std::uint8_t> morphological_close(const std::vector<std::uint8_t>& mask, int width, int height, int kernel);

/// Downsample, saturation, median blur, threshold, closing, 8-connected
/// components and area filtering. An all-background image yields an empty mask.
///
/// Re-segmenting a rendered mask is not exactly idempotent: the median blur
/// trims convex corners it produced itself. Masks that are fixed points of
/// the blur/close step reproduce exactly.
SegmentationMask segment_tissue(const RgbImage& image, const SegParams& params);

/// Tissue red / background white rendering of a mask, one pixel per mask cell.
RgbImage render_mask(const SegmentationMask& mask);

/// Rebuilds a mask from a binary grid (components are not area-filtered).
SegmentationMask mask_from_grid(std::vector<std::uint8_t> grid, int width, int height, int downsample, int full_width,
                                int full_height);

/// Mask file: render_mask as PPM with a "# mask downsample=D full_width=W full_height=H"
/// header comment; red pixels are tissue.
std::string encode_mask_ppm(const SegmentationMask& mask);
SegmentationMask decode_mask_ppm(std::string_view bytes);

// Per-slide parameter file: one line per slide,
//   slide=<name> downsample=32 sat_threshold=8 median_kernel=7 close_kernel=4 min_area=512
// Lines starting with '#' are comments. Missing keys fall back to defaults.
std::string format_seg_params_line(const std::string& slide, const SegParams& params);
std::map<std::string, SegParams> parse_seg_param_file(const std::string& text);

}  // namespace clam
