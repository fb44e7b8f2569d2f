#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "matcher/config.hpp"
#include "matcher/pipeline.hpp"
#include "matcher/segmenter.hpp"

namespace matcher {

struct Episode {
  std::string id;
  std::filesystem::path reference_features;
  std::filesystem::path reference_mask;
  std::filesystem::path target_features;
  std::string target_image_id;
  /// Target pixel dims; 0 derives them from the ground truth or the grid.
  int target_height = 0;
  int target_width = 0;
  std::optional<std::filesystem::path> ground_truth;
};

struct OracleImageSpec {
  std::string image_id;
  int height = 0;
  int width = 0;
  struct Shape {
    std::string id;
    std::filesystem::path mask;
    std::optional<std::string> parent;
  };
  std::vector<Shape> shapes;
};

/// Episode list file (JSON): {"episodes": [...], "oracle": {"images": [...]}}.
/// Relative paths resolve against the file's directory.
struct EpisodeList {
  std::vector<Episode> episodes;
  std::vector<OracleImageSpec> oracle_images;
};

EpisodeList load_episode_list(const std::filesystem::path& path);
EpisodeList parse_episode_list(const nlohmann::json& j, const std::filesystem::path& base_dir);
std::vector<OracleImageSpec> parse_oracle_images(const nlohmann::json& j,
                                                 const std::filesystem::path& base_dir);

/// Registers every listed image with its shapes loaded from PNG.
void register_oracle_images(OracleSegmenter& oracle, const std::vector<OracleImageSpec>& images);

struct EpisodeOutcome {
  std::string id;
  PixelMask mask;
  PipelineResult result;
  std::optional<double> iou;
  nlohmann::json report;
  /// Wall time; not part of the report so reports stay reproducible.
  double seconds = 0.0;
};

EpisodeOutcome run_episode(const Episode& ep, const RunConfig& cfg, Segmenter& segmenter,
                           std::uint64_t seed);

/// Builds a fresh backend per worker.
using SegmenterFactory = std::function<std::unique_ptr<Segmenter>()>;

struct BenchSummary {
  std::vector<EpisodeOutcome> outcomes;
  std::optional<double> miou;
  nlohmann::json report;
};

/// Runs all episodes on `jobs` workers; outcomes keep input order and each
/// episode's seed derives from cfg.seed and its index.
BenchSummary run_bench(const std::vector<Episode>& episodes, const RunConfig& cfg,
                       const SegmenterFactory& make_segmenter, int jobs = 1);

/// `oracle` or `external:<address>`.
SegmenterFactory segmenter_factory(const std::string& spec,
                                   std::shared_ptr<OracleSegmenter> oracle);

}  // namespace matcher
