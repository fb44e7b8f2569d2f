#include "matcher/prompt_sampler.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <utility>

#include "matcher/error.hpp"
#include "matcher/rng.hpp"

namespace matcher {

namespace {

double sq_dist(const PixelPoint& a, const PixelPoint& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

int count_distinct(std::span<const PixelPoint> points) {
  std::set<std::pair<double, double>> seen;
  for (const auto& p : points) seen.emplace(p.x, p.y);
  return static_cast<int>(seen.size());
}

int nearest_center(const PixelPoint& p, std::span<const PixelPoint> centers) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = sq_dist(p, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

std::vector<PixelPoint> seed_centers(std::span<const PixelPoint> points, int k, Rng& rng) {
  const auto n = points.size();
  std::vector<PixelPoint> centers;
  centers.push_back(points[rng.below(n)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(points[i], centers[0]);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double r = rng.uniform01() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      // Float round-off can leave the tail pick on an already chosen point.
      while (d2[pick] == 0.0 && pick > 0) --pick;
    }
    centers.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(points[i], centers.back()));
  }
  return centers;
}

// `groups` index sets of `size` from [0, pop): disjoint when the population
// allows, independent draws otherwise.
std::vector<std::vector<int>> draw_groups(Rng& rng, int pop, int groups, int size) {
  std::vector<std::vector<int>> out;
  if (groups < 1 || size < 1) return out;
  if (static_cast<long long>(groups) * size <= pop) {
    const auto all = rng.sample_without_replacement(pop, groups * size);
    for (int g = 0; g < groups; ++g) out.emplace_back(all.begin() + g * size, all.begin() + (g + 1) * size);
  } else {
    for (int g = 0; g < groups; ++g) out.push_back(rng.sample_without_replacement(pop, size));
  }
  return out;
}

// Same kind and same point set as an earlier group.
std::vector<PromptGroup> drop_repeated_groups(std::vector<PromptGroup> groups) {
  std::set<std::pair<PromptKind, std::vector<std::pair<double, double>>>> seen;
  std::vector<PromptGroup> out;
  for (auto& g : groups) {
    std::vector<std::pair<double, double>> key;
    for (const auto& p : g.points) key.emplace_back(p.x, p.y);
    std::sort(key.begin(), key.end());
    if (g.box) {
      key.emplace_back(g.box->x0, g.box->y0);
      key.emplace_back(g.box->x1, g.box->y1);
    }
    if (seen.emplace(g.kind, std::move(key)).second) out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

ClusterSet kmeans_pp(std::span<const PixelPoint> points, int k, std::uint64_t seed, int max_iter) {
  if (points.empty()) fail(ErrorCode::kInvalidArgument, "k-means over an empty point set");
  if (k < 1) fail(ErrorCode::kInvalidArgument, "k must be >= 1");
  k = std::min(k, count_distinct(points));

  Rng rng(seed);
  ClusterSet out;
  out.k = k;
  out.centers = seed_centers(points, k, rng);
  out.assignments.assign(points.size(), -1);

  for (int iter = 0; iter < std::max(max_iter, 1); ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const int c = nearest_center(points[i], out.centers);
      if (c != out.assignments[i]) {
        out.assignments[i] = c;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<double> sx(static_cast<std::size_t>(k), 0.0);
    std::vector<double> sy(static_cast<std::size_t>(k), 0.0);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto c = static_cast<std::size_t>(out.assignments[i]);
      sx[c] += points[i].x;
      sy[c] += points[i].y;
      ++counts[c];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (counts[c] > 0) out.centers[c] = {sx[c] / counts[c], sy[c] / counts[c]};
    }
  }
  return out;
}

std::string_view prompt_kind_name(PromptKind kind) {
  switch (kind) {
    case PromptKind::kPart: return "part";
    case PromptKind::kInstance: return "instance";
    case PromptKind::kGlobal: return "global";
    case PromptKind::kBox: return "box";
  }
  return "unknown";
}

Box bounding_box(std::span<const PixelPoint> points) {
  if (points.empty()) fail(ErrorCode::kInvalidArgument, "bounding box of no points");
  Box box{points[0].x, points[0].y, points[0].x, points[0].y};
  for (const auto& p : points) {
    box.x0 = std::min(box.x0, p.x);
    box.y0 = std::min(box.y0, p.y);
    box.x1 = std::max(box.x1, p.x);
    box.y1 = std::max(box.y1, p.y);
  }
  return box;
}

std::vector<PixelPoint> dense_grid_points(int grid_height, int grid_width, int stride_px, int step,
                                          int height_px, int width_px) {
  if (step < 1) fail(ErrorCode::kInvalidArgument, "dense grid step must be >= 1");
  std::vector<PixelPoint> out;
  for (int row = step / 2; row < grid_height; row += step) {
    for (int col = step / 2; col < grid_width; col += step) {
      out.push_back(patch_to_pixel(PatchPoint::from_rc(row, col, grid_width), stride_px, height_px,
                                   width_px));
    }
  }
  return out;
}

std::vector<PromptGroup> sample_prompt_groups(std::span<const PixelPoint> matched,
                                              const ClusterSet& clusters,
                                              const SamplerConfig& cfg, std::uint64_t seed,
                                              std::span<const PixelPoint> extra_instance_points) {
  if (matched.empty()) fail(ErrorCode::kInvalidArgument, "no matched points to sample from");
  if (clusters.assignments.size() != matched.size()) {
    fail(ErrorCode::kDimMismatch, "cluster assignments do not cover the matched points");
  }
  Rng rng(seed);
  std::vector<PromptGroup> groups;

  for (int c = 0; c < clusters.k; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < matched.size(); ++i) {
      if (clusters.assignments[i] == c) members.push_back(i);
    }
    if (members.empty()) continue;
    const int size = std::min<int>(cfg.part_size, static_cast<int>(members.size()));
    if (size < 1) continue;
    for (const auto& draw : draw_groups(rng, static_cast<int>(members.size()), cfg.part_groups, size)) {
      PromptGroup group{PromptKind::kPart, {}, std::nullopt};
      for (int idx : draw) group.points.push_back(matched[members[static_cast<std::size_t>(idx)]]);
      groups.push_back(std::move(group));
    }
  }

  std::vector<PixelPoint> population(matched.begin(), matched.end());
  if (!extra_instance_points.empty()) {
    std::set<std::pair<double, double>> seen;
    for (const auto& p : matched) seen.emplace(p.x, p.y);
    for (const auto& p : extra_instance_points) {
      if (seen.emplace(p.x, p.y).second) population.push_back(p);
    }
  }
  const int inst_size = std::min<int>(cfg.instance_size, static_cast<int>(population.size()));
  if (inst_size >= 1) {
    for (const auto& draw : draw_groups(rng, static_cast<int>(population.size()), cfg.instance_groups, inst_size)) {
      PromptGroup group{PromptKind::kInstance, {}, std::nullopt};
      for (int idx : draw) group.points.push_back(population[static_cast<std::size_t>(idx)]);
      groups.push_back(std::move(group));
    }
  }

  const int glob_size = std::min<int>(cfg.global_size, clusters.k);
  if (glob_size >= 1) {
    for (const auto& draw : draw_groups(rng, clusters.k, cfg.global_groups, glob_size)) {
      PromptGroup group{PromptKind::kGlobal, {}, std::nullopt};
      for (int idx : draw) group.points.push_back(clusters.centers[static_cast<std::size_t>(idx)]);
      groups.push_back(std::move(group));
    }
  }

  groups.push_back({PromptKind::kBox, {}, bounding_box(matched)});
  return drop_repeated_groups(std::move(groups));
}

}  // namespace matcher
