#include "clam/bag_io.hpp"

#include "clam/binary_io.hpp"
#include "clam/error.hpp"

#include <cmath>
#include <limits>

namespace clam {

std::uint64_t bag_byte_size(std::uint64_t k, std::uint64_t d, std::uint64_t id_length) {
  return 36 + id_length + k * d * 4 + k * 8;
}

std::string write_bag(const FeatureBag& bag) {
  const auto k = static_cast<std::uint64_t>(bag.features.rows());
  const auto d = static_cast<std::uint64_t>(bag.features.cols());
  if (bag.coords.size() != k) throw Error(ErrorKind::Dimension, "bag: coords count differs from feature rows");
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (k > kMax || d > kMax || bag.slide_id.size() > kMax) throw Error(ErrorKind::Dimension, "bag: field exceeds u32");
  ByteWriter w;
  w.put_bytes(std::string_view(kBagMagic, 8));
  w.put_u32(kBagVersion);
  w.put_u32(static_cast<std::uint32_t>(k));
  w.put_u32(static_cast<std::uint32_t>(d));
  w.put_i32(bag.label);
  w.put_u32(static_cast<std::uint32_t>(bag.slide_id.size()));
  w.put_bytes(bag.slide_id);
  w.put_u32(bag.patch_size);
  w.put_u32(bag.step);
  for (Eigen::Index r = 0; r < bag.features.rows(); ++r) {
    for (Eigen::Index c = 0; c < bag.features.cols(); ++c) {
      const auto v = static_cast<float>(bag.features(r, c));
      if (!std::isfinite(v)) throw Error(ErrorKind::Numeric, "bag: feature not representable as finite f32");
      w.put_f32(v);
    }
  }
  for (const auto& xy : bag.coords) {
    w.put_i32(xy[0]);
    w.put_i32(xy[1]);
  }
  return w.take();
}

FeatureBag read_bag(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic(std::string_view(kBagMagic, 8));
  const std::uint64_t version_at = r.offset();
  if (r.get_u32("version") != kBagVersion) throw FormatError(version_at, "unsupported bag version");
  const std::uint64_t k = r.get_u32("K");
  const std::uint64_t d = r.get_u32("D");
  FeatureBag bag;
  bag.label = r.get_i32("label");
  const std::uint64_t id_len = r.get_u32("slide id length");
  bag.slide_id = std::string(r.get_bytes(id_len, "slide id"));
  bag.patch_size = r.get_u32("patch_size");
  bag.step = r.get_u32("step");

  // K, D < 2^32 so K*D*4 + K*8 < 2^67 could wrap; check in pieces.
  const std::uint64_t payload_at = r.offset();
  const std::uint64_t remaining = r.remaining();
  if (k != 0 && (d > remaining / 4 / k || k > remaining / 8)) throw FormatError(payload_at, "bag payload truncated");
  if (k * d * 4 + k * 8 > remaining) throw FormatError(payload_at, "bag payload truncated");
  if (k * d * 4 + k * 8 < remaining) throw FormatError(payload_at + k * d * 4 + k * 8, "trailing bytes after bag payload");

  bag.features.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  for (std::uint64_t i = 0; i < k; ++i) {
    for (std::uint64_t j = 0; j < d; ++j) {
      const std::uint64_t at = r.offset();
      const float v = r.get_f32("feature");
      if (!std::isfinite(v)) throw FormatError(at, "non-finite feature value");
      bag.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  bag.coords.resize(k);
  for (auto& xy : bag.coords) {
    xy[0] = r.get_i32("coord x");
    xy[1] = r.get_i32("coord y");
  }
  r.expect_end();
  return bag;
}

void save_bag(const std::string& path, const FeatureBag& bag) { write_file_atomic(path, write_bag(bag)); }

FeatureBag load_bag(const std::string& path) { return read_bag(read_file(path)); }

}  // namespace clam
