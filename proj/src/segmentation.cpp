#include "clam/segmentation.hpp"

#include "clam/error.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace clam {

namespace {

// Clockwise in image coordinates (y down), starting west.
constexpr std::array<std::array<int, 2>, 8> kRing = {{{-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}}};

int ring_index(int dx, int dy) {
  for (int i = 0; i < 8; ++i) {
    if (kRing[i][0] == dx && kRing[i][1] == dy) return i;
  }
  return 0;
}

struct Component {
  std::vector<std::size_t> pixels;
  std::array<int, 4> bbox{};
};

std::vector<Component> connected_components(const std::vector<std::uint8_t>& mask, int w, int h) {
  std::vector<int> label(mask.size(), -1);
  std::vector<Component> out;
  std::deque<std::size_t> queue;
  for (std::size_t seed = 0; seed < mask.size(); ++seed) {
    if (!mask[seed] || label[seed] >= 0) continue;
    Component c;
    c.bbox = {w, h, 0, 0};
    label[seed] = static_cast<int>(out.size());
    queue.push_back(seed);
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      c.pixels.push_back(p);
      const int x = static_cast<int>(p % static_cast<std::size_t>(w));
      const int y = static_cast<int>(p / static_cast<std::size_t>(w));
      c.bbox = {std::min(c.bbox[0], x), std::min(c.bbox[1], y), std::max(c.bbox[2], x + 1), std::max(c.bbox[3], y + 1)};
      for (const auto& d : kRing) {
        const int nx = x + d[0], ny = y + d[1];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
        if (mask[q] && label[q] < 0) {
          label[q] = label[seed];
          queue.push_back(q);
        }
      }
    }
    std::sort(c.pixels.begin(), c.pixels.end());
    out.push_back(std::move(c));
  }
  return out;
}

// Moore-neighbour boundary trace of one component, starting from its first
// pixel in raster order and entering from the west.
std::vector<std::array<int, 2>> trace_boundary(const std::vector<std::uint8_t>& member, int w, int h,
                                               std::size_t start) {
  auto fg = [&](int x, int y) { return x >= 0 && y >= 0 && x < w && y < h && member[static_cast<std::size_t>(y) * w + x]; };
  const int sx = static_cast<int>(start % static_cast<std::size_t>(w));
  const int sy = static_cast<int>(start / static_cast<std::size_t>(w));
  std::vector<std::array<int, 2>> polygon{{sx, sy}};

  int cx = sx, cy = sy, back = 0;
  std::array<int, 2> first_step{-1, -1};
  const std::size_t limit = member.size() * 4 + 8;
  for (std::size_t iter = 0; iter < limit; ++iter) {
    int found = -1;
    for (int i = 1; i <= 8; ++i) {
      const int d = (back + i) % 8;
      if (fg(cx + kRing[d][0], cy + kRing[d][1])) {
        found = d;
        break;
      }
    }
    if (found < 0) break;  // isolated pixel
    const int nx = cx + kRing[found][0], ny = cy + kRing[found][1];
    if (cx == sx && cy == sy) {
      if (first_step[0] < 0) {
        first_step = {nx, ny};
      } else if (first_step[0] == nx && first_step[1] == ny) {
        break;
      }
    }
    const int px = cx + kRing[(found + 7) % 8][0], py = cy + kRing[(found + 7) % 8][1];
    back = ring_index(px - nx, py - ny);
    cx = nx;
    cy = ny;
    if (!(cx == sx && cy == sy)) polygon.push_back({cx, cy});
  }
  return polygon;
}

void retain_components(SegmentationMask& out, const std::vector<std::uint8_t>& closed, std::int64_t min_area) {
  const int w = out.width, h = out.height;
  std::vector<std::uint8_t> member(closed.size(), 0);
  for (const Component& c : connected_components(closed, w, h)) {
    if (static_cast<std::int64_t>(c.pixels.size()) < min_area) continue;
    for (std::size_t p : c.pixels) {
      member[p] = 1;
      out.mask[p] = 1;
    }

    Contour contour;
    contour.area = static_cast<std::int64_t>(c.pixels.size());
    contour.bbox = c.bbox;
    contour.polygon = trace_boundary(member, w, h, c.pixels.front());

    // Fill holes: flood the complement from the border of the padded bbox.
    const int x0 = c.bbox[0] - 1, y0 = c.bbox[1] - 1;
    const int bw = c.bbox[2] - c.bbox[0] + 2, bh = c.bbox[3] - c.bbox[1] + 2;
    auto is_member = [&](int lx, int ly) {
      const int x = x0 + lx, y = y0 + ly;
      return x >= 0 && y >= 0 && x < w && y < h && member[static_cast<std::size_t>(y) * w + x];
    };
    std::vector<std::uint8_t> outside(static_cast<std::size_t>(bw) * bh, 0);
    std::deque<std::array<int, 2>> queue{{0, 0}};
    outside[0] = 1;
    while (!queue.empty()) {
      const auto [lx, ly] = queue.front();
      queue.pop_front();
      constexpr std::array<std::array<int, 2>, 4> four = {{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
      for (const auto& d : four) {
        const int nx = lx + d[0], ny = ly + d[1];
        if (nx < 0 || ny < 0 || nx >= bw || ny >= bh) continue;
        const std::size_t q = static_cast<std::size_t>(ny) * bw + nx;
        if (outside[q] || is_member(nx, ny)) continue;
        outside[q] = 1;
        queue.push_back({nx, ny});
      }
    }
    for (int ly = 1; ly < bh - 1; ++ly) {
      for (int lx = 1; lx < bw - 1; ++lx) {
        if (!outside[static_cast<std::size_t>(ly) * bw + lx]) {
          out.filled[static_cast<std::size_t>(y0 + ly) * w + (x0 + lx)] = 1;
        }
      }
    }
    for (std::size_t p : c.pixels) member[p] = 0;
    out.contours.push_back(std::move(contour));
  }
}

}  // namespace

void SegParams::validate() const {
  if (downsample < 1) throw Error(ErrorKind::Config, "downsample must be at least 1");
  if (sat_threshold < 0 || sat_threshold > 255) throw Error(ErrorKind::Config, "sat_threshold must be in [0, 255]");
  if (median_kernel < 1 || median_kernel % 2 == 0) throw Error(ErrorKind::Config, "median_kernel must be odd and positive");
  if (close_kernel < 1) throw Error(ErrorKind::Config, "close_kernel must be positive");
  if (min_area < 0) throw Error(ErrorKind::Config, "min_area must be non-negative");
}

std::vector<std::uint8_t> saturation_channel(const RgbImage& image) {
  std::vector<std::uint8_t> s(static_cast<std::size_t>(image.width) * image.height);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int r = image.pixels[3 * i], g = image.pixels[3 * i + 1], b = image.pixels[3 * i + 2];
    const int mx = std::max({r, g, b});
    const int mn = std::min({r, g, b});
    s[i] = mx == 0 ? 0 : static_cast<std::uint8_t>((510 * (mx - mn) + mx) / (2 * mx));
  }
  return s;
}

std::vector<std::uint8_t> median_blur(const std::vector<std::uint8_t>& channel, int width, int height, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw Error(ErrorKind::Config, "median kernel must be odd");
  if (kernel == 1) return channel;
  const int r = kernel / 2;
  std::vector<std::uint8_t> out(channel.size());
  std::vector<std::uint8_t> window(static_cast<std::size_t>(kernel) * kernel);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      std::size_t n = 0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = std::clamp(y + dy, 0, height - 1);
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = std::clamp(x + dx, 0, width - 1);
          window[n++] = channel[static_cast<std::size_t>(yy) * width + xx];
        }
      }
      auto mid = window.begin() + static_cast<std::ptrdiff_t>(n / 2);
      std::nth_element(window.begin(), mid, window.begin() + static_cast<std::ptrdiff_t>(n));
      out[static_cast<std::size_t>(y) * width + x] = *mid;
    }
  }
  return out;
}

std::vector<std::uint8_t> morphological_close(const std::vector<std::uint8_t>& mask, int width, int height, int kernel) {
  if (kernel < 1) throw Error(ErrorKind::Config, "closing kernel must be positive");
  if (kernel == 1) return mask;
  const int lo = -(kernel / 2);
  const int hi = kernel - 1 - kernel / 2;
  std::vector<std::uint8_t> dilated(mask.size(), 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      bool any = false;
      for (int dy = lo; dy <= hi && !any; ++dy) {
        for (int dx = lo; dx <= hi && !any; ++dx) {
          const int xx = x - dx, yy = y - dy;
          any = xx >= 0 && yy >= 0 && xx < width && yy < height && mask[static_cast<std::size_t>(yy) * width + xx];
        }
      }
      dilated[static_cast<std::size_t>(y) * width + x] = any ? 1 : 0;
    }
  }
  std::vector<std::uint8_t> closed(mask.size(), 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      bool all = true;
      for (int dy = lo; dy <= hi && all; ++dy) {
        for (int dx = lo; dx <= hi && all; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= width || yy >= height) continue;
          all = dilated[static_cast<std::size_t>(yy) * width + xx] != 0;
        }
      }
      closed[static_cast<std::size_t>(y) * width + x] = all ? 1 : 0;
    }
  }
  return closed;
}

SegmentationMask segment_tissue(const RgbImage& image, const SegParams& params) {
  if (image.empty()) throw Error(ErrorKind::Dimension, "cannot segment an empty image");
  params.validate();
  const RgbImage small = downsample(image, params.downsample);
  const int w = small.width, h = small.height;

  const auto blurred = median_blur(saturation_channel(small), w, h, params.median_kernel);
  std::vector<std::uint8_t> binary(blurred.size());
  for (std::size_t i = 0; i < binary.size(); ++i) binary[i] = blurred[i] > params.sat_threshold ? 1 : 0;
  const auto closed = morphological_close(binary, w, h, params.close_kernel);

  SegmentationMask out;
  out.width = w;
  out.height = h;
  out.downsample = params.downsample;
  out.full_width = image.width;
  out.full_height = image.height;
  out.mask.assign(closed.size(), 0);
  out.filled.assign(closed.size(), 0);

  retain_components(out, closed, params.min_area);
  return out;
}

RgbImage render_mask(const SegmentationMask& mask) {
  RgbImage out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y)) out.set(x, y, {255, 0, 0});
    }
  }
  return out;
}

SegmentationMask mask_from_grid(std::vector<std::uint8_t> grid, int width, int height, int downsample, int full_width,
                                int full_height) {
  if (width <= 0 || height <= 0 || grid.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorKind::Dimension, "mask grid size does not match its dimensions");
  }
  if (downsample < 1) throw Error(ErrorKind::Config, "downsample factor must be at least 1");
  for (auto& v : grid) v = v ? 1 : 0;
  SegmentationMask out;
  out.width = width;
  out.height = height;
  out.downsample = downsample;
  out.full_width = full_width;
  out.full_height = full_height;
  out.mask.assign(grid.size(), 0);
  out.filled.assign(grid.size(), 0);
  retain_components(out, grid, 1);
  return out;
}

std::string encode_mask_ppm(const SegmentationMask& mask) {
  const std::string ppm = encode_ppm(render_mask(mask));
  // Splice the metadata comment in after the magic line.
  return ppm.substr(0, 3) + "# mask downsample=" + std::to_string(mask.downsample) +
         " full_width=" + std::to_string(mask.full_width) + " full_height=" + std::to_string(mask.full_height) + "\n" +
         ppm.substr(3);
}

SegmentationMask decode_mask_ppm(std::string_view bytes) {
  const RgbImage img = decode_ppm(bytes);
  const auto at = bytes.find("# mask ");
  if (at == std::string_view::npos) throw FormatError(3, "mask PPM lacks its metadata comment");
  const auto eol = bytes.find('\n', at);
  std::istringstream fields(std::string(bytes.substr(at + 7, eol - at - 7)));
  int ds = 0, fw = 0, fh = 0;
  std::string tok;
  while (fields >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw FormatError(at, "bad mask metadata field: " + tok);
    const std::string key = tok.substr(0, eq);
    int value = 0;
    try {
      value = std::stoi(tok.substr(eq + 1));
    } catch (const std::exception&) {
      throw FormatError(at, "bad mask metadata value: " + tok);
    }
    if (key == "downsample") ds = value;
    else if (key == "full_width") fw = value;
    else if (key == "full_height") fh = value;
    else throw FormatError(at, "unknown mask metadata key: " + key);
  }
  if (ds < 1 || fw < 1 || fh < 1) throw FormatError(at, "mask metadata incomplete");
  if ((fw + ds - 1) / ds != img.width || (fh + ds - 1) / ds != img.height) {
    throw FormatError(at, "mask metadata inconsistent with mask size");
  }
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto p = img.at(x, y);
      grid[static_cast<std::size_t>(y) * img.width + x] = (p[0] == 255 && p[1] == 0 && p[2] == 0) ? 1 : 0;
    }
  }
  return mask_from_grid(std::move(grid), img.width, img.height, ds, fw, fh);
}

std::string format_seg_params_line(const std::string& slide, const SegParams& p) {
  std::ostringstream s;
  s << "slide=" << slide << " downsample=" << p.downsample << " sat_threshold=" << p.sat_threshold
    << " median_kernel=" << p.median_kernel << " close_kernel=" << p.close_kernel << " min_area=" << p.min_area;
  return s.str();
}

std::map<std::string, SegParams> parse_seg_param_file(const std::string& text) {
  std::map<std::string, SegParams> out;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string field, slide;
    SegParams p;
    while (fields >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorKind::Config, "line " + std::to_string(line_no) + ": expected key=value, got '" + field + "'");
      }
      const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
      try {
        if (key == "slide") slide = value;
        else if (key == "downsample") p.downsample = std::stoi(value);
        else if (key == "sat_threshold") p.sat_threshold = std::stoi(value);
        else if (key == "median_kernel") p.median_kernel = std::stoi(value);
        else if (key == "close_kernel") p.close_kernel = std::stoi(value);
        else if (key == "min_area") p.min_area = std::stoll(value);
        else throw Error(ErrorKind::Config, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
      } catch (const std::logic_error&) {
        throw Error(ErrorKind::Config, "line " + std::to_string(line_no) + ": bad value for '" + key + "'");
      }
    }
    if (slide.empty()) throw Error(ErrorKind::Config, "line " + std::to_string(line_no) + ": missing slide=");
    p.validate();
    out[slide] = p;
  }
  return out;
}

}  // namespace clam
