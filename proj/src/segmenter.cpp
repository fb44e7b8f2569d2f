#include "matcher/segmenter.hpp"

#include <algorithm>
#include <cmath>

#include "matcher/error.hpp"

namespace matcher {

SegmentRequest make_request(const std::string& image_id, const PromptGroup& group, bool multimask) {
  SegmentRequest req;
  req.image_id = image_id;
  for (const auto& p : group.points) req.points.push_back({p.x, p.y, 1});
  req.box = group.box;
  req.multimask = multimask;
  return req;
}

PixelMask box_region(const Box& box, int height_px, int width_px) {
  PixelMask region(height_px, width_px);
  const int x0 = std::max(0, static_cast<int>(std::floor(box.x0)));
  const int y0 = std::max(0, static_cast<int>(std::floor(box.y0)));
  const int x1 = std::min(width_px - 1, static_cast<int>(std::floor(box.x1)));
  const int y1 = std::min(height_px - 1, static_cast<int>(std::floor(box.y1)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) region.set(y, x);
  }
  return region;
}

void OracleSegmenter::register_image(const std::string& image_id, int height_px, int width_px,
                                     std::vector<OracleShape> shapes) {
  if (images_.contains(image_id)) fail(ErrorCode::kDuplicateImage, image_id);
  if (height_px < 1 || width_px < 1) fail(ErrorCode::kInvalidArgument, "image dims must be >= 1");
  Image image{height_px, width_px, {}};
  std::map<std::string, std::string> parent_of;
  for (const auto& s : shapes) {
    if (s.mask.height() != height_px || s.mask.width() != width_px) {
      fail(ErrorCode::kDimMismatch, "shape " + s.id + " does not match image " + image_id);
    }
    if (s.parent) parent_of[s.id] = *s.parent;
  }
  for (auto& s : shapes) {
    int depth = 0;
    std::string cur = s.id;
    while (parent_of.contains(cur) && depth <= static_cast<int>(shapes.size())) {
      cur = parent_of[cur];
      ++depth;
    }
    const auto area = s.mask.area();
    image.shapes.push_back({std::move(s), depth, area});
  }
  std::stable_sort(image.shapes.begin(), image.shapes.end(),
                   [](const RegisteredShape& a, const RegisteredShape& b) {
                     if (a.depth != b.depth) return a.depth > b.depth;
                     return a.area < b.area;
                   });
  images_.emplace(image_id, std::move(image));
}

SegmentResponse OracleSegmenter::segment(const SegmentRequest& request) {
  const auto it = images_.find(request.image_id);
  if (it == images_.end()) fail(ErrorCode::kUnknownImage, request.image_id);
  const Image& image = it->second;
  if (request.points.empty() && !request.box) {
    fail(ErrorCode::kInvalidArgument, "request carries neither points nor a box");
  }

  std::vector<const RegisteredShape*> hits;
  for (const auto& s : image.shapes) {
    const bool consistent = std::all_of(request.points.begin(), request.points.end(),
                                        [&](const PromptPoint& p) {
                                          return s.shape.mask.contains(p.x, p.y) == (p.label != 0);
                                        });
    if (consistent) hits.push_back(&s);
  }

  SegmentResponse resp;
  if (request.box) {
    const auto region = box_region(*request.box, image.height, image.width);
    const RegisteredShape* best = nullptr;
    double best_iou = 0.0;
    for (const auto* s : hits) {
      const double v = iou(s->shape.mask, region);
      if (v > best_iou) {
        best_iou = v;
        best = s;
      }
    }
    hits.clear();
    if (best != nullptr) hits.push_back(best);
  }
  const std::size_t limit = request.multimask ? kMaxMasks : 1;
  for (const auto* s : hits) {
    if (resp.masks.size() == limit) break;
    resp.masks.push_back(s->shape.mask);
    resp.confidences.push_back(1.0);
  }
  if (resp.masks.empty()) {
    resp.masks.emplace_back(image.height, image.width);
    resp.confidences.push_back(0.0);
  }
  return resp;
}

}  // namespace matcher
