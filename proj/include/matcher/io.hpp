#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "matcher/tensor.hpp"

namespace matcher {

inline constexpr std::array<char, 4> kFeatureMagic{'M', 'T', 'F', 'T'};
inline constexpr std::uint32_t kFeatureVersion = 1;

/// Reads an MTFT feature file: magic, u32 version, u32 H, u32 W, u32 C, then
/// H*W*C little-endian f32. The file format carries no stride, so the caller
/// supplies it. The origin defaults to the file stem.
FeatureMap load_feature_map(const std::filesystem::path& path, int stride_px = 14);
FeatureMap decode_feature_map(const std::vector<std::uint8_t>& bytes, int stride_px = 14,
                              std::string origin = {});

void save_feature_map(const FeatureMap& map, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_feature_map(const FeatureMap& map);

/// 8-bit grayscale PNG, nonzero = true. Color or 16-bit inputs are reduced to
/// a single 8-bit channel first.
PixelMask load_mask_png(const std::filesystem::path& path);
void save_mask_png(const PixelMask& mask, const std::filesystem::path& path);

struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB
};

RgbImage load_rgb_png(const std::filesystem::path& path);
void save_rgb_png(const RgbImage& image, const std::filesystem::path& path);

}  // namespace matcher
