#include "clam/image.hpp"

#include "clam/binary_io.hpp"
#include "clam/error.hpp"

#include <algorithm>
#include <cctype>

namespace clam {

RgbImage::RgbImage(int w, int h, std::array<std::uint8_t, 3> fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw Error(ErrorKind::Dimension, "image dimensions must be positive");
  pixels.resize(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3);
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = fill[0];
    pixels[i + 1] = fill[1];
    pixels[i + 2] = fill[2];
  }
}

std::array<std::uint8_t, 3> RgbImage::at(int x, int y) const {
  const std::size_t i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
  return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

void RgbImage::set(int x, int y, std::array<std::uint8_t, 3> rgb) {
  const std::size_t i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
  pixels[i] = rgb[0];
  pixels[i + 1] = rgb[1];
  pixels[i + 2] = rgb[2];
}

void RgbImage::fill_rect(int x0, int y0, int w, int h, std::array<std::uint8_t, 3> rgb) {
  for (int y = std::max(0, y0); y < std::min(height, y0 + h); ++y) {
    for (int x = std::max(0, x0); x < std::min(width, x0 + w); ++x) set(x, y, rgb);
  }
}

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::uint64_t header_number(std::string_view bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  std::uint64_t value = 0;
  while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
    value = value * 10 + static_cast<std::uint64_t>(bytes[pos] - '0');
    if (value > (1u << 30)) throw FormatError(start, "PPM header value too large");
    ++pos;
  }
  if (pos == start) throw FormatError(start, "expected a number in PPM header");
  return value;
}

}  // namespace

RgbImage decode_ppm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes.substr(0, 2) != "P6") throw FormatError(0, "not a binary PPM (missing P6 magic)");
  std::size_t pos = 2;
  const auto w = header_number(bytes, pos);
  const auto h = header_number(bytes, pos);
  const std::size_t maxval_at = pos;
  const auto maxval = header_number(bytes, pos);
  if (maxval != 255) throw FormatError(maxval_at, "only maxval 255 is supported");
  if (w == 0 || h == 0) throw FormatError(2, "PPM dimensions must be positive");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw FormatError(pos, "missing whitespace after PPM header");
  }
  ++pos;
  const std::uint64_t need = w * h * 3;
  if (bytes.size() - pos < need) throw FormatError(pos, "truncated PPM pixel data");
  RgbImage img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return img;
}

std::string encode_ppm(const RgbImage& image) {
  if (image.empty()) throw Error(ErrorKind::Dimension, "cannot encode an empty image");
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

RgbImage read_ppm(const std::string& path) { return decode_ppm(read_file(path)); }

void write_ppm(const std::string& path, const RgbImage& image) { write_file_atomic(path, encode_ppm(image)); }

RgbImage downsample(const RgbImage& image, int factor) {
  if (factor < 1) throw Error(ErrorKind::Config, "downsample factor must be at least 1");
  if (factor == 1) return image;
  const int w = (image.width + factor - 1) / factor;
  const int h = (image.height + factor - 1) / factor;
  RgbImage out(w, h);
  for (int oy = 0; oy < h; ++oy) {
    for (int ox = 0; ox < w; ++ox) {
      std::array<std::uint64_t, 3> sum{};
      std::uint64_t count = 0;
      for (int y = oy * factor; y < std::min(image.height, (oy + 1) * factor); ++y) {
        for (int x = ox * factor; x < std::min(image.width, (ox + 1) * factor); ++x) {
          const auto p = image.at(x, y);
          for (int c = 0; c < 3; ++c) sum[c] += p[c];
          ++count;
        }
      }
      std::array<std::uint8_t, 3> px{};
      for (int c = 0; c < 3; ++c) px[c] = static_cast<std::uint8_t>((2 * sum[c] + count) / (2 * count));
      out.set(ox, oy, px);
    }
  }
  return out;
}

RgbImage crop(const RgbImage& image, int x, int y, int size) {
  RgbImage out(size, size);
  for (int dy = 0; dy < size; ++dy) {
    const int sy = y + dy;
    if (sy < 0 || sy >= image.height) continue;
    for (int dx = 0; dx < size; ++dx) {
      const int sx = x + dx;
      if (sx < 0 || sx >= image.width) continue;
      out.set(dx, dy, image.at(sx, sy));
    }
  }
  return out;
}

}  // namespace clam
