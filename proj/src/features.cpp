#include "clam/features.hpp"

#include "clam/error.hpp"
#include "clam/rng.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace clam {

Vector patch_statistics(const RgbImage& patch) {
  if (patch.width != kStubPatchSize || patch.height != kStubPatchSize) {
    throw Error(ErrorKind::Dimension, "stub features need a 256x256 patch");
  }
  constexpr int kBlocks = 8, kSide = kStubPatchSize / kBlocks, kPixels = kSide * kSide;
  Vector stats = Vector::Zero(kStubStatCount);
  for (int by = 0; by < kBlocks; ++by) {
    for (int bx = 0; bx < kBlocks; ++bx) {
      const int b = by * kBlocks + bx;
      double sum[3] = {0, 0, 0}, lum = 0.0, lum2 = 0.0;
      for (int y = by * kSide; y < (by + 1) * kSide; ++y) {
        for (int x = bx * kSide; x < (bx + 1) * kSide; ++x) {
          const auto p = patch.at(x, y);
          for (int c = 0; c < 3; ++c) sum[c] += p[c];
          const double l = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
          lum += l;
          lum2 += l * l;
        }
      }
      for (int c = 0; c < 3; ++c) stats(3 * b + c) = sum[c] / (255.0 * kPixels);
      const double mean = lum / kPixels;
      stats(192 + b) = std::max(0.0, lum2 / kPixels - mean * mean);
    }
  }
  return stats;
}

Matrix stub_projection(int dim, std::uint64_t seed) {
  if (dim < 1) throw Error(ErrorKind::Config, "feature dimension must be positive");
  SeededRng rng(seed);
  Matrix p(dim, kStubStatCount);
  const double scale = 1.0 / std::sqrt(static_cast<double>(kStubStatCount));
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < kStubStatCount; ++c) p(r, c) = scale * rng.normal();
  }
  return p;
}

Vector stub_features(const RgbImage& patch, int dim, std::uint64_t seed) {
  return stub_projection(dim, seed) * patch_statistics(patch);
}

StubExtractor::StubExtractor(int dim, std::uint64_t seed) : projection_(stub_projection(dim, seed)) {}

Vector StubExtractor::extract(const RgbImage& patch) const { return projection_ * patch_statistics(patch); }

FeatureBag featurize(const RgbImage& image, const PatchGrid& grid, const FeatureExtractor& extractor,
                     const std::string& slide_id, std::int32_t label) {
  FeatureBag bag;
  bag.slide_id = slide_id;
  bag.label = label;
  bag.patch_size = static_cast<std::uint32_t>(grid.patch_size);
  bag.step = static_cast<std::uint32_t>(grid.step);
  bag.features.resize(static_cast<Eigen::Index>(grid.coords.size()), extractor.dim());
  for (std::size_t i = 0; i < grid.coords.size(); ++i) {
    const auto& c = grid.coords[i];
    const Vector f = extractor.extract(crop(image, c[0], c[1], grid.patch_size));
    // The container stores f32; keep in-memory bags identical to what is written.
    bag.features.row(static_cast<Eigen::Index>(i)) = f.cast<float>().cast<double>().transpose();
    bag.coords.push_back(c);
  }
  return bag;
}

namespace {

double parse_double(std::string_view s, int line_no) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    throw Error(ErrorKind::Format, "feature CSV line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

FeatureBag import_feature_csv(const std::string& text, const std::string& slide_id, std::int32_t label,
                              std::uint32_t patch_size, std::uint32_t step) {
  std::istringstream lines(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  std::vector<std::array<std::int32_t, 2>> coords;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (rows.empty() && coords.empty() && line.rfind("x,", 0) == 0) continue;
    std::vector<double> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(parse_double(std::string_view(line).substr(start, comma - start), line_no));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() < 3) throw Error(ErrorKind::Format, "feature CSV line " + std::to_string(line_no) + ": need x,y and features");
    if (!rows.empty() && fields.size() - 2 != rows.front().size()) {
      throw Error(ErrorKind::Format, "feature CSV line " + std::to_string(line_no) + ": inconsistent feature count");
    }
    coords.push_back({static_cast<std::int32_t>(fields[0]), static_cast<std::int32_t>(fields[1])});
    rows.emplace_back(fields.begin() + 2, fields.end());
  }
  FeatureBag bag;
  bag.slide_id = slide_id;
  bag.label = label;
  bag.patch_size = patch_size;
  bag.step = step;
  bag.coords = std::move(coords);
  const Eigen::Index d = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  bag.features.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      bag.features(static_cast<Eigen::Index>(r), c) = static_cast<double>(static_cast<float>(rows[r][c]));
    }
  }
  return bag;
}

}  // namespace clam
