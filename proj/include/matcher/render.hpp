#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>

#include "matcher/io.hpp"
#include "matcher/tensor.hpp"

namespace matcher {

inline constexpr std::array<std::array<std::uint8_t, 3>, 6> kOverlayPalette{{
    {230, 25, 75},
    {60, 180, 75},
    {0, 130, 200},
    {245, 130, 48},
    {145, 30, 180},
    {70, 240, 240},
}};

inline constexpr std::uint8_t kBackgroundGray = 128;

/// Blends each mask (palette color i) at alpha 0.5 over the image, or over a
/// uniform gray canvas when no image is given.
RgbImage compose_overlay(const std::optional<RgbImage>& image, std::span<const PixelMask> masks);

void render_overlay(const std::optional<RgbImage>& image, std::span<const PixelMask> masks,
                    const std::filesystem::path& out);

}  // namespace matcher
