#include "matcher/instance_matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "matcher/correspondence.hpp"
#include "matcher/error.hpp"
#include "matcher/rng.hpp"

namespace matcher {

double combined_score(double emd, double purity, double coverage, const ScoreWeights& w) {
  return w.alpha * (1.0 - emd) + w.beta * purity * std::pow(coverage, w.lambda);
}

ProposalScore make_score(double emd, double purity, double coverage, const ScoreWeights& w) {
  return {emd, purity, coverage, combined_score(emd, purity, coverage, w)};
}

OTProblem feature_transport_problem(std::span<const float> ref_features,
                                    std::span<const float> prop_features, int channels) {
  const auto ref = FeatureRows::of(ref_features, channels);
  const auto prop = FeatureRows::of(prop_features, channels);
  if (ref.rows < 1 || prop.rows < 1) fail(ErrorCode::kEmptySupport, "transport support is empty");
  const auto sim = cosine_sim_matrix(ref, prop);
  OTProblem p;
  p.supply.assign(static_cast<std::size_t>(ref.rows), 1.0 / ref.rows);
  p.demand.assign(static_cast<std::size_t>(prop.rows), 1.0 / prop.rows);
  p.cost.reserve(sim.values().size());
  for (float s : sim.values()) p.cost.push_back(0.5 * (1.0 - static_cast<double>(s)));
  return p;
}

std::vector<int> subsample_indices(int n, int cap, std::uint64_t seed) {
  std::vector<int> idx;
  if (cap <= 0 || n <= cap) {
    idx.resize(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
  }
  Rng rng(seed);
  idx = rng.sample_without_replacement(n, cap);
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

std::vector<PatchPoint> capped(std::span<const PatchPoint> patches, int cap, std::uint64_t seed) {
  std::vector<PatchPoint> out;
  for (int i : subsample_indices(static_cast<int>(patches.size()), cap, seed)) {
    out.push_back(patches[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace

double proposal_emd(std::span<const float> ref_features, const FeatureMap& z_tgt,
                    std::span<const PatchPoint> prop_patches, int cap, std::uint64_t seed) {
  if (ref_features.empty() || prop_patches.empty()) {
    fail(ErrorCode::kEmptySupport, "reference or proposal has no patches");
  }
  const int c = z_tgt.channels();
  if (ref_features.size() % static_cast<std::size_t>(c) != 0) {
    fail(ErrorCode::kDimMismatch, "reference features do not match target channels");
  }
  const int ref_rows = static_cast<int>(ref_features.size()) / c;
  std::vector<float> ref_sub;
  for (int i : subsample_indices(ref_rows, cap, derive_seed(seed, 1))) {
    const auto row = ref_features.subspan(static_cast<std::size_t>(i) * c, static_cast<std::size_t>(c));
    ref_sub.insert(ref_sub.end(), row.begin(), row.end());
  }
  const auto prop = capped(prop_patches, cap, derive_seed(seed, 2));
  const auto prop_feats = gather_features(z_tgt, prop);
  return emd(feature_transport_problem(ref_sub, prop_feats, c));
}

double proposal_emd(const FeatureMap& z_ref, const FeatureMap& z_tgt,
                    std::span<const PatchPoint> ref_patches,
                    std::span<const PatchPoint> prop_patches, int cap, std::uint64_t seed) {
  if (z_ref.channels() != z_tgt.channels()) {
    fail(ErrorCode::kDimMismatch, "reference and target channel counts differ");
  }
  if (ref_patches.empty() || prop_patches.empty()) {
    fail(ErrorCode::kEmptySupport, "reference or proposal has no patches");
  }
  const auto ref_feats = gather_features(z_ref, ref_patches);
  return proposal_emd(ref_feats, z_tgt, prop_patches, cap, seed);
}

PurityCoverage purity_coverage(std::span<const PixelPoint> matched, const PixelMask& proposal,
                               int stride_px) {
  if (matched.empty()) fail(ErrorCode::kInvalidArgument, "no matched points");
  if (stride_px < 1) fail(ErrorCode::kInvalidArgument, "stride_px must be >= 1");
  const auto area = proposal.area();
  if (area == 0) fail(ErrorCode::kZeroArea, "proposal mask is empty");
  int inside = 0;
  for (const auto& p : matched) inside += proposal.contains(p.x, p.y) ? 1 : 0;
  const double area_cells = static_cast<double>(area) / (static_cast<double>(stride_px) * stride_px);
  return {inside / area_cells, static_cast<double>(inside) / static_cast<double>(matched.size()),
          inside};
}

bool passes_thresholds(const ProposalScore& s, const SelectConfig& cfg) {
  if (cfg.max_emd && s.emd > *cfg.max_emd) return false;
  if (cfg.min_purity && s.purity < *cfg.min_purity) return false;
  if (cfg.min_coverage && s.coverage < *cfg.min_coverage) return false;
  return true;
}

Selection select_and_merge(std::span<const ScoredProposal> proposals, const SelectConfig& cfg) {
  if (proposals.empty()) fail(ErrorCode::kInvalidArgument, "no proposals to select from");
  Selection out;
  out.merged = PixelMask(proposals[0].mask.height(), proposals[0].mask.width());

  std::vector<int> survivors;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    if (passes_thresholds(proposals[i].score, cfg)) survivors.push_back(static_cast<int>(i));
  }
  std::stable_sort(survivors.begin(), survivors.end(), [&](int a, int b) {
    const auto& sa = proposals[static_cast<std::size_t>(a)].score;
    const auto& sb = proposals[static_cast<std::size_t>(b)].score;
    if (sa.score != sb.score) return sa.score > sb.score;
    return sa.coverage > sb.coverage;
  });

  for (int idx : survivors) {
    if (static_cast<int>(out.kept.size()) >= cfg.num_merged) break;
    const auto& mask = proposals[static_cast<std::size_t>(idx)].mask;
    const bool duplicate = std::any_of(out.kept.begin(), out.kept.end(), [&](int k) {
      return iou(mask, proposals[static_cast<std::size_t>(k)].mask) > cfg.dedup_iou;
    });
    if (duplicate) continue;
    out.kept.push_back(idx);
    out.merged |= mask;
  }
  return out;
}

}  // namespace matcher
