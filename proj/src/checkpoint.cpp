#include "clam/checkpoint.hpp"

#include "clam/binary_io.hpp"
#include "clam/error.hpp"

#include <vector>

namespace clam {

namespace {

template <typename Params>
std::string encode(std::string_view magic, const Params& params) {
  params.validate();
  ByteWriter w;
  w.put_bytes(magic);
  w.put_u32(kCheckpointVersion);
  w.put_u32(static_cast<std::uint32_t>(params.n_classes));
  w.put_u32(static_cast<std::uint32_t>(params.feature_dim));
  for (const Matrix* m : params.blocks()) w.put_matrix(*m);
  return w.take();
}

// Reads the header, then each block, checking its declared shape against the
// one implied by (n_classes, D) before touching the payload.
template <typename Params>
Params decode(std::string_view magic, std::string_view bytes,
              std::vector<std::pair<Eigen::Index, Eigen::Index>> (*shapes)(const Params&)) {
  ByteReader r(bytes);
  r.expect_magic(magic);
  const std::uint64_t version_at = r.offset();
  if (const auto version = r.get_u32("version"); version != kCheckpointVersion) {
    throw FormatError(version_at, "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint64_t n_at = r.offset();
  const std::uint32_t n = r.get_u32("n_classes");
  if (n < 2 || n > 1u << 16) throw FormatError(n_at, "implausible class count " + std::to_string(n));
  const std::uint64_t d_at = r.offset();
  const std::uint32_t d = r.get_u32("feature dimension");
  if (d < 1 || d > 1u << 24) throw FormatError(d_at, "implausible feature dimension " + std::to_string(d));

  Params p;
  p.n_classes = static_cast<int>(n);
  p.feature_dim = static_cast<Eigen::Index>(d);
  const auto expected = shapes(p);
  const auto names = Params::block_names();
  auto blocks = p.blocks();
  for (std::size_t i = 0; i < Params::kBlockCount; ++i) {
    const std::uint64_t at = r.offset();
    ByteReader peek(bytes.substr(at));
    const auto rows = peek.get_u32(names[i]);
    const auto cols = peek.get_u32(names[i]);
    if (rows != expected[i].first || cols != expected[i].second) {
      throw FormatError(at, "block " + std::string(names[i]) + " is " + std::to_string(rows) + "x" +
                                std::to_string(cols) + ", expected " + std::to_string(expected[i].first) + "x" +
                                std::to_string(expected[i].second));
    }
    *blocks[i] = r.get_matrix(names[i]);
  }
  r.expect_end();
  p.validate();
  return p;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> clam_shapes(const ClamParams& p) {
  const Eigen::Index n = p.n_classes;
  return {{kEmbedDim, p.feature_dim}, {1, kEmbedDim},     {kAttentionDim, kEmbedDim}, {1, kAttentionDim},
          {kAttentionDim, kEmbedDim}, {1, kAttentionDim}, {n, kAttentionDim},         {1, n},
          {n, kEmbedDim},             {1, n},             {2 * n, kEmbedDim},         {1, 2 * n}};
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> mil_shapes(const MilParams& p) {
  const Eigen::Index n = p.n_classes;
  return {{kEmbedDim, p.feature_dim}, {1, kEmbedDim}, {n, kEmbedDim}, {1, n}};
}

}  // namespace

std::string encode_checkpoint(const ClamParams& params) { return encode(kClamCheckpointMagic, params); }

ClamParams decode_checkpoint(std::string_view bytes) {
  return decode<ClamParams>(kClamCheckpointMagic, bytes, &clam_shapes);
}

std::string encode_mil_checkpoint(const MilParams& params) { return encode(kMilCheckpointMagic, params); }

MilParams decode_mil_checkpoint(std::string_view bytes) {
  return decode<MilParams>(kMilCheckpointMagic, bytes, &mil_shapes);
}

void save_checkpoint(const std::string& path, const ClamParams& params) {
  write_file_atomic(path, encode_checkpoint(params));
}

ClamParams load_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path)); }

void save_mil_checkpoint(const std::string& path, const MilParams& params) {
  write_file_atomic(path, encode_mil_checkpoint(params));
}

MilParams load_mil_checkpoint(const std::string& path) { return decode_mil_checkpoint(read_file(path)); }

}  // namespace clam
