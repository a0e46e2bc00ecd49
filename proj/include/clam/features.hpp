#pragma once

#include "clam/bag.hpp"
#include "clam/image.hpp"
#include "clam/numerics.hpp"
#include "clam/patching.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace clam {

inline constexpr int kStubPatchSize = 256;
inline constexpr int kStubStatCount = 256;  // 8x8 blocks: 192 RGB means + 64 luminance variances

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual int dim() const = 0;
  virtual Vector extract(const RgbImage& patch) const = 0;
};

/// Block statistics of a 256x256 patch over an 8x8 grid of 32x32 blocks.
/// Entries 0..191: per block (row-major) the R, G, B means scaled to [0,1].
/// Entries 192..255: per block the population variance of luminance
/// 0.299 R + 0.587 G + 0.114 B, in [0,1] units.
Vector patch_statistics(const RgbImage& patch);

/// D x 256 projection, entries N(0, 1/256) drawn row-major from SeededRng(seed).
Matrix stub_projection(int dim, std::uint64_t seed);

Vector stub_features(const RgbImage& patch, int dim, std::uint64_t seed);

class StubExtractor final : public FeatureExtractor {
 public:
  StubExtractor(int dim, std::uint64_t seed);
  int dim() const override { return static_cast<int>(projection_.rows()); }
  Vector extract(const RgbImage& patch) const override;

 private:
  Matrix projection_;
};

/// Crops every grid patch from the full-resolution image and stacks the features.
FeatureBag featurize(const RgbImage& image, const PatchGrid& grid, const FeatureExtractor& extractor,
                     const std::string& slide_id, std::int32_t label);

/// External features: one patch per line "x,y,f_0,...,f_{D-1}". Blank lines
/// and lines starting with '#' are skipped; a first line starting with "x,"
/// is treated as a header. Every row must have the same D.
FeatureBag import_feature_csv(const std::string& text, const std::string& slide_id, std::int32_t label,
                              std::uint32_t patch_size = 256, std::uint32_t step = 256);

}  // namespace clam
