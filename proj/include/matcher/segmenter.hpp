#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "matcher/prompt_sampler.hpp"
#include "matcher/tensor.hpp"

namespace matcher {

struct PromptPoint {
  double x = 0.0;
  double y = 0.0;
  int label = 1;  // 1 foreground, 0 background
  friend bool operator==(const PromptPoint&, const PromptPoint&) = default;
};

struct SegmentRequest {
  std::string image_id;
  std::vector<PromptPoint> points;
  std::optional<Box> box;
  bool multimask = true;
};

struct SegmentResponse {
  std::vector<PixelMask> masks;
  std::vector<double> confidences;
};

SegmentRequest make_request(const std::string& image_id, const PromptGroup& group,
                            bool multimask = true);

/// The promptable segmenter role. Implementations return at least one mask
/// per request; an all-false mask with confidence 0 means "nothing here".
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual SegmentResponse segment(const SegmentRequest& request) = 0;
};

struct OracleShape {
  std::string id;
  PixelMask mask;
  /// Id of the enclosing shape for whole/part/subpart hierarchies.
  std::optional<std::string> parent;
};

/// Deterministic stand-in for a promptable segmenter over registered ground
/// truth shapes. Point prompts return every shape holding all positive points
/// and no negative ones, deepest shapes first (then smaller, then earlier).
/// Box prompts return the shape with the highest IoU against the box region.
class OracleSegmenter final : public Segmenter {
 public:
  static constexpr std::size_t kMaxMasks = 3;

  void register_image(const std::string& image_id, int height_px, int width_px,
                      std::vector<OracleShape> shapes);
  bool has_image(const std::string& image_id) const { return images_.contains(image_id); }

  SegmentResponse segment(const SegmentRequest& request) override;

 private:
  struct RegisteredShape {
    OracleShape shape;
    int depth = 0;
    std::size_t area = 0;
  };
  struct Image {
    int height = 0;
    int width = 0;
    std::vector<RegisteredShape> shapes;  // sorted by depth desc, area asc, order
  };
  std::map<std::string, Image> images_;
};

/// Pixels whose integer coordinates fall inside the box, clipped to the image.
PixelMask box_region(const Box& box, int height_px, int width_px);

}  // namespace matcher
