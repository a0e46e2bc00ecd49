#include "clam/patching.hpp"

#include "clam/error.hpp"

#include <cmath>
#include <sstream>

namespace clam {

int patch_step(int patch_size, double overlap) {
  if (patch_size < 1) throw Error(ErrorKind::Config, "patch_size must be positive");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw Error(ErrorKind::Config, "overlap must lie in [0, 1)");
  const auto step = static_cast<int>(std::floor(patch_size * (1.0 - overlap)));
  return std::max(1, step);
}

PatchGrid extract_patch_grid(const SegmentationMask& mask, int patch_size, double overlap) {
  PatchGrid grid;
  grid.patch_size = patch_size;
  grid.step = patch_step(patch_size, overlap);
  if (mask.empty()) return grid;
  const int ds = mask.downsample;
  for (int y = 0; y + patch_size <= mask.full_height; y += grid.step) {
    const int my = (y + patch_size / 2) / ds;
    if (my >= mask.height) continue;
    for (int x = 0; x + patch_size <= mask.full_width; x += grid.step) {
      const int mx = (x + patch_size / 2) / ds;
      if (mx < mask.width && mask.inside(mx, my)) grid.coords.push_back({x, y});
    }
  }
  return grid;
}

std::string format_patch_grid(const PatchGrid& grid) {
  std::ostringstream s;
  s << "patch_size=" << grid.patch_size << " step=" << grid.step << " magnification=" << grid.magnification
    << " count=" << grid.coords.size() << "\n";
  for (const auto& c : grid.coords) s << c[0] << "," << c[1] << "\n";
  return s.str();
}

PatchGrid parse_patch_grid(const std::string& text) {
  std::istringstream lines(text);
  std::string line;
  if (!std::getline(lines, line)) throw Error(ErrorKind::Format, "patch grid: empty file");
  PatchGrid grid;
  long long count = -1;
  std::istringstream header(line);
  std::string tok;
  while (header >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Format, "patch grid: bad header field '" + tok + "'");
    const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
    try {
      if (key == "patch_size") grid.patch_size = std::stoi(value);
      else if (key == "step") grid.step = std::stoi(value);
      else if (key == "magnification") grid.magnification = value;
      else if (key == "count") count = std::stoll(value);
      else throw Error(ErrorKind::Format, "patch grid: unknown header key '" + key + "'");
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::Format, "patch grid: bad value for '" + key + "'");
    }
  }
  if (grid.patch_size < 1 || grid.step < 1) throw Error(ErrorKind::Format, "patch grid: sizes must be positive");
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorKind::Format, "patch grid: expected x,y got '" + line + "'");
    try {
      grid.coords.push_back({std::stoi(line.substr(0, comma)), std::stoi(line.substr(comma + 1))});
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::Format, "patch grid: bad coordinate line '" + line + "'");
    }
  }
  if (count >= 0 && static_cast<std::size_t>(count) != grid.coords.size()) {
    throw Error(ErrorKind::Format, "patch grid: count does not match number of coordinates");
  }
  return grid;
}

}  // namespace clam
