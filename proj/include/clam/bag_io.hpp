#pragma once

#include "clam/bag.hpp"

#include <string>
#include <string_view>

namespace clam {

// CLAMBAG1 container, little-endian:
//   "CLAMBAG1" | version u32 (=1) | K u32 | D u32 | label i32 |
//   id length u32 | id bytes (UTF-8) | patch_size u32 | step u32 |
//   K*D features f32 row-major | K*2 coords i32 (x, y)
// A bag with K = 0 is exactly 36 + id length bytes.
inline constexpr char kBagMagic[] = "CLAMBAG1";
inline constexpr std::uint32_t kBagVersion = 1;

std::uint64_t bag_byte_size(std::uint64_t k, std::uint64_t d, std::uint64_t id_length);

/// Features are narrowed to f32; bags whose features are f32-representable
/// round-trip bitwise.
std::string write_bag(const FeatureBag& bag);
FeatureBag read_bag(std::string_view bytes);

void save_bag(const std::string& path, const FeatureBag& bag);
FeatureBag load_bag(const std::string& path);

}  // namespace clam
