#include "matcher/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "matcher/error.hpp"

namespace matcher {

FeatureMap::FeatureMap(int height, int width, int channels, std::vector<float> data, int stride_px,
                       std::string origin)
    : height_(height),
      width_(width),
      channels_(channels),
      stride_px_(stride_px),
      origin_(std::move(origin)),
      data_(std::move(data)) {
  if (height < 1 || width < 1 || channels < 1) {
    fail(ErrorCode::kInvalidArgument, "feature map dims must be >= 1, got " +
                                          std::to_string(height) + "x" + std::to_string(width) +
                                          "x" + std::to_string(channels));
  }
  if (stride_px < 1) fail(ErrorCode::kInvalidArgument, "stride_px must be >= 1");
  const auto expected = static_cast<std::size_t>(height) * width * channels;
  if (data_.size() != expected) {
    fail(ErrorCode::kDimMismatch, "feature data has " + std::to_string(data_.size()) +
                                      " values, expected " + std::to_string(expected));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      fail(ErrorCode::kNonFiniteValue, "value index " + std::to_string(i) + " is not finite");
    }
  }
}

PixelMask::PixelMask(int height_px, int width_px, bool fill)
    : height_(height_px),
      width_(width_px),
      bits_(static_cast<std::size_t>(std::max(height_px, 0)) * std::max(width_px, 0),
            fill ? 1 : 0) {
  if (height_px < 0 || width_px < 0) fail(ErrorCode::kInvalidArgument, "negative mask dims");
}

PixelMask::PixelMask(int height_px, int width_px, std::vector<std::uint8_t> bits)
    : height_(height_px), width_(width_px), bits_(std::move(bits)) {
  if (height_px < 0 || width_px < 0) fail(ErrorCode::kInvalidArgument, "negative mask dims");
  if (bits_.size() != static_cast<std::size_t>(height_px) * width_px) {
    fail(ErrorCode::kDimMismatch, "mask bits length does not match dims");
  }
  for (auto& b : bits_) b = b != 0 ? 1 : 0;
}

bool PixelMask::contains(double x, double y) const {
  if (!(x >= 0.0) || !(y >= 0.0)) return false;
  return contains(static_cast<int>(std::floor(y)), static_cast<int>(std::floor(x)));
}

std::size_t PixelMask::area() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool PixelMask::any() const noexcept {
  return std::find(bits_.begin(), bits_.end(), std::uint8_t{1}) != bits_.end();
}

PixelMask& PixelMask::operator|=(const PixelMask& other) {
  if (other.height_ != height_ || other.width_ != width_) {
    fail(ErrorCode::kDimMismatch, "mask union with different dims");
  }
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
  return *this;
}

namespace {

void require_same_dims(const PixelMask& a, const PixelMask& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    fail(ErrorCode::kDimMismatch, std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                                      " vs " + std::to_string(b.height()) + "x" +
                                      std::to_string(b.width()));
  }
}

}  // namespace

std::size_t intersection_area(const PixelMask& a, const PixelMask& b) {
  require_same_dims(a, b);
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.bits().size(); ++i) n += a.bits()[i] & b.bits()[i];
  return n;
}

std::size_t union_area(const PixelMask& a, const PixelMask& b) {
  require_same_dims(a, b);
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.bits().size(); ++i) n += a.bits()[i] | b.bits()[i];
  return n;
}

double iou(const PixelMask& a, const PixelMask& b) {
  const auto u = union_area(a, b);
  if (u == 0) return 1.0;
  return static_cast<double>(intersection_area(a, b)) / static_cast<double>(u);
}

std::vector<PatchPoint> downsample_mask_to_grid(const PixelMask& mask, int grid_height,
                                                int grid_width, int stride_px, double threshold) {
  if (grid_height < 1 || grid_width < 1 || stride_px < 1) {
    fail(ErrorCode::kInvalidArgument, "grid dims and stride must be >= 1");
  }
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "threshold must lie in (0, 1]");
  }
  std::vector<PatchPoint> out;
  for (int row = 0; row < grid_height; ++row) {
    const int y0 = row * stride_px;
    const int y1 = std::min(y0 + stride_px, mask.height());
    for (int col = 0; col < grid_width; ++col) {
      const int x0 = col * stride_px;
      const int x1 = std::min(x0 + stride_px, mask.width());
      if (y1 <= y0 || x1 <= x0) continue;
      std::size_t hits = 0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) hits += mask.at(y, x) ? 1 : 0;
      }
      const auto cell = static_cast<double>(y1 - y0) * static_cast<double>(x1 - x0);
      if (static_cast<double>(hits) >= threshold * cell) {
        out.push_back(PatchPoint::from_rc(row, col, grid_width));
      }
    }
  }
  if (out.empty()) {
    fail(ErrorCode::kEmptyResult, "no patch reaches coverage " + std::to_string(threshold));
  }
  return out;
}

PixelPoint patch_to_pixel(const PatchPoint& p, int stride_px, int height_px, int width_px) {
  PixelPoint out{(p.col + 0.5) * stride_px, (p.row + 0.5) * stride_px};
  if (width_px > 0) out.x = std::clamp(out.x, 0.0, width_px - 0.5);
  if (height_px > 0) out.y = std::clamp(out.y, 0.0, height_px - 0.5);
  return out;
}

std::vector<PixelPoint> patches_to_pixels(std::span<const PatchPoint> patches, int stride_px,
                                          int height_px, int width_px) {
  std::vector<PixelPoint> out;
  out.reserve(patches.size());
  for (const auto& p : patches) out.push_back(patch_to_pixel(p, stride_px, height_px, width_px));
  return out;
}

std::vector<float> gather_features(const FeatureMap& map, std::span<const PatchPoint> patches) {
  const auto c = static_cast<std::size_t>(map.channels());
  std::vector<float> out(patches.size() * c);
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const int flat = patches[i].flat;
    if (flat < 0 || flat >= map.num_patches()) {
      fail(ErrorCode::kIndexOutOfRange, "patch index " + std::to_string(flat));
    }
    const auto src = map.patch(flat);
    std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  return out;
}

}  // namespace matcher
