#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace clam {

// 8-bit RGB raster, row-major, three bytes per pixel.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, std::array<std::uint8_t, 3> fill = {255, 255, 255});

  bool empty() const { return width <= 0 || height <= 0; }
  std::array<std::uint8_t, 3> at(int x, int y) const;
  void set(int x, int y, std::array<std::uint8_t, 3> rgb);
  void fill_rect(int x0, int y0, int w, int h, std::array<std::uint8_t, 3> rgb);

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Binary PPM (P6, maxval 255). Comments in the header are skipped.
RgbImage decode_ppm(std::string_view bytes);
std::string encode_ppm(const RgbImage& image);
RgbImage read_ppm(const std::string& path);
void write_ppm(const std::string& path, const RgbImage& image);

/// Box-average downsampling. Output is ceil(w / f) x ceil(h / f); edge blocks
/// average only the pixels they cover. Channel means are rounded half-up.
RgbImage downsample(const RgbImage& image, int factor);

/// Copies a size x size window with top-left (x, y). Pixels outside the
/// image are white.
RgbImage crop(const RgbImage& image, int x, int y, int size);

}  // namespace clam
