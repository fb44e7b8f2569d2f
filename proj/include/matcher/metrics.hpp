#pragma once

#include <span>

#include "matcher/tensor.hpp"

namespace matcher {

/// Mean per-pair IoU; a pair of empty masks scores 1.
double miou(std::span<const PixelMask> preds, std::span<const PixelMask> gts);

/// Foreground pixels with a 4-neighbour outside the mask (image border counts
/// as outside).
PixelMask boundary_map(const PixelMask& mask);

/// Boundary match radius in pixels: ceil(0.0088 * image diagonal).
int boundary_tolerance(int height_px, int width_px);

/// Boundary F-measure between two masks at the standard tolerance. Two empty
/// boundaries score 1, exactly one empty scores 0.
double boundary_f(const PixelMask& pred, const PixelMask& gt);

struct JandF {
  double j = 0.0;
  double f = 0.0;
  double jf = 0.0;
};

/// Region similarity (mean IoU) and boundary accuracy (mean F) over aligned
/// frame sequences of one object.
JandF j_and_f(std::span<const PixelMask> pred_seq, std::span<const PixelMask> gt_seq);

}  // namespace matcher
