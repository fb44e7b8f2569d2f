#include "matcher/io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "matcher/error.hpp"

namespace matcher {

namespace {

constexpr std::size_t kHeaderBytes = 4 + 4 * 4;

std::uint32_t read_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

FeatureMap decode_feature_map(const std::vector<std::uint8_t>& bytes, int stride_px,
                              std::string origin) {
  const std::size_t magic_len = std::min<std::size_t>(bytes.size(), 4);
  if (std::memcmp(bytes.data(), kFeatureMagic.data(), magic_len) != 0) {
    fail(ErrorCode::kBadMagic, "offset 0: expected \"MTFT\"");
  }
  if (bytes.size() < kHeaderBytes) {
    fail(ErrorCode::kTruncatedFile,
         "offset " + std::to_string(bytes.size()) + ": header needs " +
             std::to_string(kHeaderBytes) + " bytes");
  }
  const auto version = read_u32_le(bytes.data() + 4);
  if (version != kFeatureVersion) {
    fail(ErrorCode::kBadMagic, "offset 4: unsupported version " + std::to_string(version));
  }
  const auto h = read_u32_le(bytes.data() + 8);
  const auto w = read_u32_le(bytes.data() + 12);
  const auto c = read_u32_le(bytes.data() + 16);
  if (h == 0 || w == 0 || c == 0) {
    fail(ErrorCode::kInvalidArgument, "offset 8: zero dimension in header");
  }
  const std::uint64_t count = std::uint64_t{h} * w * c;
  const std::uint64_t need = kHeaderBytes + count * 4;
  if (bytes.size() < need) {
    fail(ErrorCode::kTruncatedFile, "offset " + std::to_string(bytes.size()) + ": expected " +
                                        std::to_string(need) + " bytes for " +
                                        std::to_string(count) + " floats");
  }
  std::vector<float> data(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto offset = kHeaderBytes + i * 4;
    const float v = std::bit_cast<float>(read_u32_le(bytes.data() + offset));
    if (!std::isfinite(v)) {
      fail(ErrorCode::kNonFiniteValue, "offset " + std::to_string(offset));
    }
    data[i] = v;
  }
  return FeatureMap(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c), std::move(data),
                    stride_px, std::move(origin));
}

FeatureMap load_feature_map(const std::filesystem::path& path, int stride_px) {
  return decode_feature_map(read_file(path), stride_px, path.stem().string());
}

std::vector<std::uint8_t> encode_feature_map(const FeatureMap& map) {
  std::vector<std::uint8_t> out(kFeatureMagic.begin(), kFeatureMagic.end());
  out.reserve(kHeaderBytes + map.data().size() * 4);
  write_u32_le(out, kFeatureVersion);
  write_u32_le(out, static_cast<std::uint32_t>(map.height()));
  write_u32_le(out, static_cast<std::uint32_t>(map.width()));
  write_u32_le(out, static_cast<std::uint32_t>(map.channels()));
  for (float v : map.data()) write_u32_le(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

void save_feature_map(const FeatureMap& map, const std::filesystem::path& path) {
  const auto bytes = encode_feature_map(map);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIoError, "short write to " + path.string());
}

namespace {

std::vector<std::uint8_t> read_png(const std::filesystem::path& path, png_uint_32 format,
                                   int& height, int& width) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    fail(ErrorCode::kIoError, path.string() + ": " + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    fail(ErrorCode::kIoError, path.string() + ": " + image.message);
  }
  height = static_cast<int>(image.height);
  width = static_cast<int>(image.width);
  return buffer;
}

void write_png(const std::filesystem::path& path, png_uint_32 format, int height, int width,
               const std::uint8_t* pixels) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, pixels, 0, nullptr)) {
    fail(ErrorCode::kIoError, path.string() + ": " + image.message);
  }
}

}  // namespace

PixelMask load_mask_png(const std::filesystem::path& path) {
  int h = 0;
  int w = 0;
  auto gray = read_png(path, PNG_FORMAT_GRAY, h, w);
  return PixelMask(h, w, std::move(gray));
}

void save_mask_png(const PixelMask& mask, const std::filesystem::path& path) {
  if (mask.empty_dims()) fail(ErrorCode::kInvalidArgument, "cannot save a 0-sized mask");
  std::vector<std::uint8_t> gray(mask.bits().size());
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = mask.bits()[i] ? 255 : 0;
  write_png(path, PNG_FORMAT_GRAY, mask.height(), mask.width(), gray.data());
}

RgbImage load_rgb_png(const std::filesystem::path& path) {
  RgbImage img;
  img.pixels = read_png(path, PNG_FORMAT_RGB, img.height, img.width);
  return img;
}

void save_rgb_png(const RgbImage& image, const std::filesystem::path& path) {
  if (image.pixels.size() != static_cast<std::size_t>(image.height) * image.width * 3) {
    fail(ErrorCode::kDimMismatch, "RGB buffer does not match dims");
  }
  write_png(path, PNG_FORMAT_RGB, image.height, image.width, image.pixels.data());
}

}  // namespace matcher
