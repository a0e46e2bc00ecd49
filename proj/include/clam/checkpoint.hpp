#pragma once

#include "clam/baselines.hpp"
#include "clam/model.hpp"

#include <string>
#include <string_view>

namespace clam {

inline constexpr std::string_view kClamCheckpointMagic{"CLAMCKPT", 8};
inline constexpr std::string_view kMilCheckpointMagic{"MILCKPT\0", 8};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout: magic (8 bytes), version u32, n_classes u32, D u32, then every
// parameter block in block_names() order as (rows u32, cols u32, row-major
// f64), all little-endian. The embedding activation switch is not stored.
std::string encode_checkpoint(const ClamParams& params);
ClamParams decode_checkpoint(std::string_view bytes);

// Same layout with the MIL magic and blocks W1, b1, W2, b2.
std::string encode_mil_checkpoint(const MilParams& params);
MilParams decode_mil_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const ClamParams& params);
ClamParams load_checkpoint(const std::string& path);
void save_mil_checkpoint(const std::string& path, const MilParams& params);
MilParams load_mil_checkpoint(const std::string& path);

}  // namespace clam
