#include "matcher/render.hpp"

#include "matcher/error.hpp"

namespace matcher {

RgbImage compose_overlay(const std::optional<RgbImage>& image, std::span<const PixelMask> masks) {
  if (!image && masks.empty()) fail(ErrorCode::kInvalidArgument, "nothing to render");
  RgbImage out;
  if (image) {
    out = *image;
  } else {
    out.height = masks[0].height();
    out.width = masks[0].width();
    out.pixels.assign(static_cast<std::size_t>(out.height) * out.width * 3, kBackgroundGray);
  }
  for (std::size_t m = 0; m < masks.size(); ++m) {
    const auto& mask = masks[m];
    if (mask.height() != out.height || mask.width() != out.width) {
      fail(ErrorCode::kDimMismatch, "overlay mask does not match the image");
    }
    const auto& color = kOverlayPalette[m % kOverlayPalette.size()];
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        if (!mask.at(y, x)) continue;
        auto* px = &out.pixels[(static_cast<std::size_t>(y) * out.width + x) * 3];
        for (int c = 0; c < 3; ++c) {
          px[c] = static_cast<std::uint8_t>((static_cast<int>(px[c]) + color[static_cast<std::size_t>(c)] + 1) / 2);
        }
      }
    }
  }
  return out;
}

void render_overlay(const std::optional<RgbImage>& image, std::span<const PixelMask> masks,
                    const std::filesystem::path& out) {
  save_rgb_png(compose_overlay(image, masks), out);
}

}  // namespace matcher
