#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "matcher/tensor.hpp"

namespace matcher {

struct ClusterSet {
  int k = 0;
  std::vector<int> assignments;
  std::vector<PixelPoint> centers;
};

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or max_iter is reached. k shrinks to the number of distinct
/// points. Ties go to the lower cluster index.
ClusterSet kmeans_pp(std::span<const PixelPoint> points, int k, std::uint64_t seed,
                     int max_iter = 100);

struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
  friend bool operator==(const Box&, const Box&) = default;
};

enum class PromptKind { kPart, kInstance, kGlobal, kBox };

std::string_view prompt_kind_name(PromptKind kind);

struct PromptGroup {
  PromptKind kind = PromptKind::kPart;
  std::vector<PixelPoint> points;  // positive labels
  std::optional<Box> box;
};

struct SamplerConfig {
  int num_clusters = 8;
  int part_groups = 1;
  int part_size = 1;
  int instance_groups = 4;
  int instance_size = 3;
  int global_groups = 2;
  int global_size = 3;
  /// Draw instance-level points from the matched points plus a dense grid
  /// (multi-instance tasks).
  bool dense_instance_points = false;
  int dense_grid_step = 4;
  int kmeans_max_iter = 100;
};

/// Emits part-level groups per cluster, instance-level groups over all matched
/// points (plus `extra_instance_points`), global groups over the cluster
/// centers and one box around the matched points, in that order. Groups of one
/// kind (per cluster for parts) are disjoint when the population allows; a
/// group repeating an earlier group's kind and point set is dropped.
std::vector<PromptGroup> sample_prompt_groups(std::span<const PixelPoint> matched,
                                              const ClusterSet& clusters,
                                              const SamplerConfig& cfg, std::uint64_t seed,
                                              std::span<const PixelPoint> extra_instance_points = {});

Box bounding_box(std::span<const PixelPoint> points);

/// Centers of every `step`-th patch in both directions.
std::vector<PixelPoint> dense_grid_points(int grid_height, int grid_width, int stride_px, int step,
                                          int height_px, int width_px);

}  // namespace matcher
