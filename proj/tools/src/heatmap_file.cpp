#include "bdc/cli/heatmap_file.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "bdc/cli/errors.hpp"

namespace bdc::cli {

namespace {

constexpr std::uint8_t kMagic[4] = {'C', 'H', 'M', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

float get_f32(std::span<const std::uint8_t> b, std::size_t at) { return std::bit_cast<float>(get_u32(b, at)); }

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw DataError(std::string("heatmap ") + what + " does not fit in 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_heatmap(const CornerHeatmap& hm) {
  const ClassGrid& tl = hm.tl();
  std::vector<std::uint8_t> out;
  out.reserve(kHeatmapHeaderBytes + 8 * tl.size());
  for (std::uint8_t b : kMagic) out.push_back(b);
  put_u32(out, kHeatmapVersion);
  put_u32(out, checked_u32(tl.channels(), "channel count"));
  put_u32(out, checked_u32(tl.height(), "height"));
  put_u32(out, checked_u32(tl.width(), "width"));
  put_f32(out, static_cast<float>(hm.stride()));
  for (float v : hm.tl().values()) put_f32(out, v);
  for (float v : hm.br().values()) put_f32(out, v);
  return out;
}

CornerHeatmap decode_heatmap(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeatmapHeaderBytes) throw DataError("heatmap file shorter than its header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw DataError("heatmap file has bad magic (expected CHM1)");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kHeatmapVersion) {
    throw DataError("unsupported heatmap version " + std::to_string(version));
  }
  const std::size_t c = get_u32(bytes, 8);
  const std::size_t h = get_u32(bytes, 12);
  const std::size_t w = get_u32(bytes, 16);
  const float stride = get_f32(bytes, 20);
  const unsigned __int128 cells = static_cast<unsigned __int128>(c) * h * w;
  const unsigned __int128 expected = kHeatmapHeaderBytes + cells * 8;
  if (expected != bytes.size()) {
    throw DataError("heatmap file length " + std::to_string(bytes.size()) + " does not match header (C=" +
                    std::to_string(c) + " H=" + std::to_string(h) + " W=" + std::to_string(w) + ")");
  }
  if (!(stride > 0.0f) || !std::isfinite(stride)) throw DataError("heatmap stride must be positive");
  if (h == 0 || w == 0) throw DataError("heatmap grid must be non-empty");

  ClassGrid tl(c, h, w), br(c, h, w);
  const std::size_t n = static_cast<std::size_t>(cells);
  std::size_t at = kHeatmapHeaderBytes;
  for (ClassGrid* g : {&tl, &br}) {
    auto vals = g->values();
    for (std::size_t i = 0; i < n; ++i, at += 4) {
      const float v = get_f32(bytes, at);
      if (!(v >= 0.0f && v <= 1.0f)) throw DataError("heatmap value outside [0,1] at byte " + std::to_string(at));
      vals[i] = v;
    }
  }
  return {std::move(tl), std::move(br), static_cast<double>(stride)};
}

void write_heatmap(const std::filesystem::path& path, const CornerHeatmap& hm) {
  const auto bytes = encode_heatmap(hm);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

CornerHeatmap read_heatmap(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_heatmap(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace bdc::cli
