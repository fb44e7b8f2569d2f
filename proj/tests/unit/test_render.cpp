#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "matcher/error.hpp"
#include "matcher/io.hpp"
#include "matcher/render.hpp"
#include "matcher/synthetic.hpp"

using namespace matcher;

namespace {

std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("empty mask leaves the background untouched") {
  const std::vector<PixelMask> masks{PixelMask(6, 5)};
  const auto out = compose_overlay(std::nullopt, masks);
  CHECK(out.height == 6);
  CHECK(out.width == 5);
  for (auto v : out.pixels) CHECK(v == kBackgroundGray);

  RgbImage img{2, 2, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}};
  const std::vector<PixelMask> empty{PixelMask(2, 2)};
  CHECK(compose_overlay(img, empty).pixels == img.pixels);
}

TEST_CASE("full mask tints every pixel") {
  const std::vector<PixelMask> masks{PixelMask(3, 3, true), PixelMask(3, 3)};
  const auto out = compose_overlay(std::nullopt, masks);
  const auto& c = kOverlayPalette[0];
  for (std::size_t i = 0; i < out.pixels.size(); i += 3) {
    for (std::size_t k = 0; k < 3; ++k) CHECK(out.pixels[i + k] == (kBackgroundGray + c[k] + 1) / 2);
  }
  RgbImage black{1, 1, {0, 0, 0}};
  const std::vector<PixelMask> second{PixelMask(1, 1), PixelMask(1, 1, true)};
  const auto& c1 = kOverlayPalette[1];
  CHECK(compose_overlay(black, second).pixels ==
        std::vector<std::uint8_t>{static_cast<std::uint8_t>((c1[0] + 1) / 2), static_cast<std::uint8_t>((c1[1] + 1) / 2),
                                  static_cast<std::uint8_t>((c1[2] + 1) / 2)});
}

TEST_CASE("mask-only render is bit-stable") {
  const auto dir = std::filesystem::temp_directory_path() / ("matcher_render_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const std::vector<PixelMask> masks{synthetic::disk(40, 50, 20, 20, 9), synthetic::rect(40, 50, 30, 5, 45, 35)};
  render_overlay(std::nullopt, masks, dir / "a.png");
  render_overlay(std::nullopt, masks, dir / "b.png");
  CHECK(slurp(dir / "a.png") == slurp(dir / "b.png"));
  const auto back = load_rgb_png(dir / "a.png");
  CHECK(back.pixels == compose_overlay(std::nullopt, masks).pixels);
  std::filesystem::remove_all(dir);
}

TEST_CASE("render errors") {
  CHECK_THROWS_AS(compose_overlay(std::nullopt, {}), MatcherError);
  RgbImage img{2, 2, std::vector<std::uint8_t>(12, 0)};
  const std::vector<PixelMask> wrong{PixelMask(3, 3)};
  CHECK_THROWS_AS(compose_overlay(img, wrong), MatcherError);
  const std::vector<PixelMask> ok{PixelMask(2, 2)};
  CHECK_THROWS_AS(render_overlay(img, ok, "/nonexistent/dir/out.png"), MatcherError);
}
