#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace matcher {

/// Patch-level feature tensor of one image, stored H x W x C row-major
/// (patch-major, then channel).
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int height, int width, int channels, std::vector<float> data, int stride_px = 14,
             std::string origin = {});

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  int stride_px() const noexcept { return stride_px_; }
  int num_patches() const noexcept { return height_ * width_; }
  const std::string& origin() const noexcept { return origin_; }
  std::span<const float> data() const noexcept { return data_; }

  std::span<const float> patch(int flat) const {
    return {data_.data() + static_cast<std::size_t>(flat) * channels_,
            static_cast<std::size_t>(channels_)};
  }
  std::span<const float> patch(int row, int col) const { return patch(row * width_ + col); }

  /// Pixel extent of the patch grid.
  int height_px() const noexcept { return height_ * stride_px_; }
  int width_px() const noexcept { return width_ * stride_px_; }

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  int stride_px_ = 14;
  std::string origin_;
  std::vector<float> data_;
};

/// Binary mask at pixel resolution.
class PixelMask {
 public:
  PixelMask() = default;
  PixelMask(int height_px, int width_px, bool fill = false);
  PixelMask(int height_px, int width_px, std::vector<std::uint8_t> bits);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  bool empty_dims() const noexcept { return height_ == 0 || width_ == 0; }

  bool at(int y, int x) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int y, int x, bool value = true) {
    bits_[static_cast<std::size_t>(y) * width_ + x] = value ? 1 : 0;
  }
  /// Out-of-bounds reads are false.
  bool contains(int y, int x) const {
    return y >= 0 && x >= 0 && y < height_ && x < width_ && at(y, x);
  }
  bool contains(double x, double y) const;

  std::size_t area() const noexcept;
  bool any() const noexcept;
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  PixelMask& operator|=(const PixelMask& other);
  friend bool operator==(const PixelMask&, const PixelMask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

std::size_t intersection_area(const PixelMask& a, const PixelMask& b);
std::size_t union_area(const PixelMask& a, const PixelMask& b);
/// Both empty counts as a perfect match.
double iou(const PixelMask& a, const PixelMask& b);

struct PatchPoint {
  int row = 0;
  int col = 0;
  int flat = 0;

  static PatchPoint from_flat(int flat, int grid_width) {
    return {flat / grid_width, flat % grid_width, flat};
  }
  static PatchPoint from_rc(int row, int col, int grid_width) {
    return {row, col, row * grid_width + col};
  }
  friend bool operator==(const PatchPoint&, const PatchPoint&) = default;
  friend auto operator<=>(const PatchPoint& a, const PatchPoint& b) { return a.flat <=> b.flat; }
};

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

/// Patches whose cell is covered by the mask at a fraction >= threshold.
/// Border cells clipped by the image use their clipped area as denominator.
/// Throws EmptyResult when nothing passes.
std::vector<PatchPoint> downsample_mask_to_grid(const PixelMask& mask, int grid_height,
                                                int grid_width, int stride_px,
                                                double threshold = 0.5);

/// Center of the patch cell, clamped inside the image when bounds are given.
PixelPoint patch_to_pixel(const PatchPoint& p, int stride_px, int height_px = 0,
                          int width_px = 0);

std::vector<PixelPoint> patches_to_pixels(std::span<const PatchPoint> patches, int stride_px,
                                          int height_px, int width_px);

/// Copies the feature vectors at the given patches into a dense rows x C buffer.
std::vector<float> gather_features(const FeatureMap& map, std::span<const PatchPoint> patches);

}  // namespace matcher
