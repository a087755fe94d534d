#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bdc/heatmap.hpp"

namespace bdc::cli {

// Layout, all little-endian:
//   "CHM1" | u32 version=1 | u32 C | u32 H | u32 W | f32 stride
//   | f32[C*H*W] tl (c, y, x) | f32[C*H*W] br
inline constexpr std::uint32_t kHeatmapVersion = 1;
inline constexpr std::size_t kHeatmapHeaderBytes = 24;

std::vector<std::uint8_t> encode_heatmap(const CornerHeatmap& hm);
/// Throws DataError on bad magic, version, length or payload range.
CornerHeatmap decode_heatmap(std::span<const std::uint8_t> bytes);

void write_heatmap(const std::filesystem::path& path, const CornerHeatmap& hm);
CornerHeatmap read_heatmap(const std::filesystem::path& path);

}  // namespace bdc::cli
