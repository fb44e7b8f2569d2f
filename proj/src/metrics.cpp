#include "matcher/metrics.hpp"

#include <cmath>
#include <vector>

#include "matcher/error.hpp"

namespace matcher {

namespace {

void require_aligned(std::size_t a, std::size_t b) {
  if (a != b) {
    fail(ErrorCode::kDimMismatch,
         "sequence lengths differ: " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

// Fraction of `from` boundary pixels lying within `radius` of a `to` boundary pixel.
double matched_fraction(const PixelMask& from, const PixelMask& to, int radius) {
  std::vector<std::pair<int, int>> disk;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) disk.emplace_back(dy, dx);
    }
  }
  std::size_t total = 0;
  std::size_t hit = 0;
  for (int y = 0; y < from.height(); ++y) {
    for (int x = 0; x < from.width(); ++x) {
      if (!from.at(y, x)) continue;
      ++total;
      for (const auto& [dy, dx] : disk) {
        if (to.contains(y + dy, x + dx)) {
          ++hit;
          break;
        }
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace

double miou(std::span<const PixelMask> preds, std::span<const PixelMask> gts) {
  require_aligned(preds.size(), gts.size());
  if (preds.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += iou(preds[i], gts[i]);
  return sum / static_cast<double>(preds.size());
}

PixelMask boundary_map(const PixelMask& mask) {
  PixelMask out(mask.height(), mask.width());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(y, x)) continue;
      if (!mask.contains(y - 1, x) || !mask.contains(y + 1, x) || !mask.contains(y, x - 1) ||
          !mask.contains(y, x + 1)) {
        out.set(y, x);
      }
    }
  }
  return out;
}

int boundary_tolerance(int height_px, int width_px) {
  const double diag = std::hypot(static_cast<double>(height_px), static_cast<double>(width_px));
  return static_cast<int>(std::ceil(0.0088 * diag));
}

double boundary_f(const PixelMask& pred, const PixelMask& gt) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    fail(ErrorCode::kDimMismatch, "boundary F over masks of different dims");
  }
  const auto pb = boundary_map(pred);
  const auto gb = boundary_map(gt);
  const bool pred_empty = !pb.any();
  const bool gt_empty = !gb.any();
  if (pred_empty && gt_empty) return 1.0;
  if (pred_empty || gt_empty) return 0.0;
  const int radius = boundary_tolerance(pred.height(), pred.width());
  const double precision = matched_fraction(pb, gb, radius);
  const double recall = matched_fraction(gb, pb, radius);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

JandF j_and_f(std::span<const PixelMask> pred_seq, std::span<const PixelMask> gt_seq) {
  require_aligned(pred_seq.size(), gt_seq.size());
  if (pred_seq.empty()) return {};
  double j = 0.0;
  double f = 0.0;
  for (std::size_t i = 0; i < pred_seq.size(); ++i) {
    j += iou(pred_seq[i], gt_seq[i]);
    f += boundary_f(pred_seq[i], gt_seq[i]);
  }
  const auto n = static_cast<double>(pred_seq.size());
  return {j / n, f / n, (j / n + f / n) / 2.0};
}

}  // namespace matcher
