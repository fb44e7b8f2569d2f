#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "matcher/config.hpp"
#include "matcher/instance_matching.hpp"
#include "matcher/prompt_sampler.hpp"
#include "matcher/segmenter.hpp"
#include "matcher/tensor.hpp"

namespace matcher {

/// One piece of reference evidence: features plus the on-mask patches.
struct ReferenceView {
  const FeatureMap* features = nullptr;
  std::vector<PatchPoint> patches;
};

struct TargetView {
  const FeatureMap* features = nullptr;
  std::string image_id;
  int height_px = 0;
  int width_px = 0;
};

struct ProposalRecord {
  int group = 0;
  PromptKind kind = PromptKind::kPart;
  double confidence = 0.0;
  std::size_t area = 0;
  ProposalScore score;
  bool passed = false;
};

struct PipelineResult {
  PixelMask mask;
  /// Proposals with nonempty masks, in segmenter call order.
  std::vector<ProposalRecord> proposals;
  std::vector<int> kept;
  int num_forward = 0;
  int num_matched = 0;
  int num_groups = 0;
  /// Mean score of the merged proposals, 0 when nothing was kept.
  double winning_score = 0.0;
  /// No match survived filtering; the mask is empty.
  bool lost = false;
};

/// Correspondence matching against every reference view (pooled), prompt
/// sampling, segmentation, scoring and merging.
PipelineResult run_pipeline(std::span<const ReferenceView> references, const TargetView& target,
                            const RunConfig& cfg, Segmenter& segmenter, std::uint64_t seed);

/// Reference patches for a mask, as the pipeline derives them.
std::vector<PatchPoint> reference_patches(const PixelMask& mask, const FeatureMap& features,
                                          const GridConfig& grid);

nlohmann::json pipeline_report(const PipelineResult& result);

}  // namespace matcher
