#include "matcher/pipeline.hpp"

#include <map>
#include <unordered_set>

#include "matcher/error.hpp"
#include "matcher/patch_matching.hpp"
#include "matcher/rng.hpp"

namespace matcher {

namespace {

std::uint64_t mask_hash(const PixelMask& mask) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : mask.bits()) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Proposal cells for EMD; masks thinner than the coverage threshold fall back
// to every cell they touch.
std::vector<PatchPoint> proposal_patches(const PixelMask& mask, const FeatureMap& target,
                                         const GridConfig& grid) {
  try {
    return downsample_mask_to_grid(mask, target.height(), target.width(), target.stride_px(),
                                   grid.mask_threshold);
  } catch (const MatcherError& e) {
    if (e.code() != ErrorCode::kEmptyResult) throw;
  }
  const double one_pixel = 1.0 / (static_cast<double>(target.stride_px()) * target.stride_px());
  return downsample_mask_to_grid(mask, target.height(), target.width(), target.stride_px(),
                                 one_pixel);
}

}  // namespace

std::vector<PatchPoint> reference_patches(const PixelMask& mask, const FeatureMap& features,
                                          const GridConfig& grid) {
  return downsample_mask_to_grid(mask, features.height(), features.width(), features.stride_px(),
                                 grid.mask_threshold);
}

PipelineResult run_pipeline(std::span<const ReferenceView> references, const TargetView& target,
                            const RunConfig& cfg, Segmenter& segmenter, std::uint64_t seed) {
  if (target.features == nullptr) fail(ErrorCode::kInvalidArgument, "target features missing");
  const FeatureMap& z_tgt = *target.features;
  const int height_px = target.height_px > 0 ? target.height_px : z_tgt.height_px();
  const int width_px = target.width_px > 0 ? target.width_px : z_tgt.width_px();
  const int stride = z_tgt.stride_px();

  PipelineResult result;
  result.mask = PixelMask(height_px, width_px);

  std::vector<PatchPoint> matched;
  std::unordered_set<int> seen;
  std::vector<float> pooled_ref;
  for (const auto& ref : references) {
    if (ref.features == nullptr || ref.patches.empty()) continue;
    const auto ref_feats = gather_features(*ref.features, ref.patches);
    pooled_ref.insert(pooled_ref.end(), ref_feats.begin(), ref_feats.end());
    try {
      const auto m = bidirectional_match(*ref.features, z_tgt, ref.patches, cfg.matching);
      result.num_forward += static_cast<int>(m.forward.size());
      for (const auto& p : m.matched) {
        if (seen.insert(p.flat).second) matched.push_back(p);
      }
    } catch (const MatcherError& e) {
      if (e.code() != ErrorCode::kEmptyMatch) throw;
    }
  }
  result.num_matched = static_cast<int>(matched.size());
  if (matched.empty()) {
    result.lost = true;
    return result;
  }

  const auto points = patches_to_pixels(matched, stride, height_px, width_px);
  const auto clusters = kmeans_pp(points, cfg.sampler.num_clusters, derive_seed(seed, 11),
                                  cfg.sampler.kmeans_max_iter);
  std::vector<PixelPoint> dense;
  if (cfg.sampler.dense_instance_points) {
    dense = dense_grid_points(z_tgt.height(), z_tgt.width(), stride, cfg.sampler.dense_grid_step,
                              height_px, width_px);
  }
  const auto groups = sample_prompt_groups(points, clusters, cfg.sampler, derive_seed(seed, 12), dense);
  result.num_groups = static_cast<int>(groups.size());

  std::vector<ScoredProposal> scored;
  std::map<std::uint64_t, ProposalScore> cache;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto response = segmenter.segment(make_request(target.image_id, groups[g]));
    for (std::size_t k = 0; k < response.masks.size(); ++k) {
      const auto& mask = response.masks[k];
      if (mask.height() != height_px || mask.width() != width_px) {
        fail(ErrorCode::kDimMismatch, "segmenter mask for " + target.image_id +
                                          " does not match the target image dims");
      }
      if (!mask.any()) continue;
      const auto key = mask_hash(mask);
      auto it = cache.find(key);
      if (it == cache.end()) {
        const auto cells = proposal_patches(mask, z_tgt, cfg.grid);
        const double emd_value =
            proposal_emd(pooled_ref, z_tgt, cells, cfg.emd_support_cap, derive_seed(seed, key));
        const auto pc = purity_coverage(points, mask, stride);
        it = cache.emplace(key, make_score(emd_value, pc.purity, pc.coverage, cfg.select.weights)).first;
      }
      ProposalRecord rec;
      rec.group = static_cast<int>(g);
      rec.kind = groups[g].kind;
      rec.confidence = response.confidences[k];
      rec.area = mask.area();
      rec.score = it->second;
      rec.passed = passes_thresholds(rec.score, cfg.select);
      result.proposals.push_back(rec);
      scored.push_back({mask, rec.score});
    }
  }
  if (scored.empty()) return result;

  auto selection = select_and_merge(scored, cfg.select);
  result.mask = std::move(selection.merged);
  result.kept = std::move(selection.kept);
  if (!result.kept.empty()) {
    double sum = 0.0;
    for (int k : result.kept) sum += scored[static_cast<std::size_t>(k)].score.score;
    result.winning_score = sum / static_cast<double>(result.kept.size());
  }
  return result;
}

nlohmann::json pipeline_report(const PipelineResult& result) {
  nlohmann::json proposals = nlohmann::json::array();
  for (std::size_t i = 0; i < result.proposals.size(); ++i) {
    const auto& p = result.proposals[i];
    proposals.push_back({{"index", i},
                         {"group", p.group},
                         {"kind", std::string(prompt_kind_name(p.kind))},
                         {"confidence", p.confidence},
                         {"area", p.area},
                         {"emd", p.score.emd},
                         {"purity", p.score.purity},
                         {"coverage", p.score.coverage},
                         {"score", p.score.score},
                         {"passed", p.passed}});
  }
  return {{"num_forward", result.num_forward},
          {"num_matched", result.num_matched},
          {"num_groups", result.num_groups},
          {"lost", result.lost},
          {"proposals", proposals},
          {"kept", result.kept},
          {"winning_score", result.winning_score},
          {"final_area", result.mask.area()}};
}

}  // namespace matcher
