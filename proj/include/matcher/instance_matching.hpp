#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "matcher/optimal_transport.hpp"
#include "matcher/tensor.hpp"

namespace matcher {

struct ScoreWeights {
  double alpha = 1.0;
  double beta = 0.0;
  double lambda = 0.0;
};

struct ProposalScore {
  double emd = 0.0;
  double purity = 0.0;
  double coverage = 0.0;
  double score = 0.0;
};

/// alpha * (1 - emd) + beta * purity * coverage^lambda, with 0^0 = 1.
double combined_score(double emd, double purity, double coverage, const ScoreWeights& w);
ProposalScore make_score(double emd, double purity, double coverage, const ScoreWeights& w);

inline constexpr int kDefaultSupportCap = 256;

/// OT problem between reference features and proposal features: uniform
/// weights, cost 1/2 (1 - cosine similarity).
OTProblem feature_transport_problem(std::span<const float> ref_features,
                                    std::span<const float> prop_features, int channels);

/// EMD between the features inside the reference mask and inside the proposal.
/// Supports larger than `cap` are uniformly subsampled with `seed`.
double proposal_emd(const FeatureMap& z_ref, const FeatureMap& z_tgt,
                    std::span<const PatchPoint> ref_patches,
                    std::span<const PatchPoint> prop_patches, int cap = kDefaultSupportCap,
                    std::uint64_t seed = 0);

/// Same, from already gathered reference features (pooled references).
double proposal_emd(std::span<const float> ref_features, const FeatureMap& z_tgt,
                    std::span<const PatchPoint> prop_patches, int cap, std::uint64_t seed);

/// Keeps at most `cap` of `n` indices, sorted, chosen uniformly with `seed`.
std::vector<int> subsample_indices(int n, int cap, std::uint64_t seed);

struct PurityCoverage {
  double purity = 0.0;
  double coverage = 0.0;
  int points_inside = 0;
};

/// Counts matched points whose pixel centers fall inside the proposal.
/// purity = inside / (proposal area / stride^2), coverage = inside / |matched|.
/// Throws ZeroArea for an empty proposal.
PurityCoverage purity_coverage(std::span<const PixelPoint> matched, const PixelMask& proposal,
                               int stride_px);

struct SelectConfig {
  std::optional<double> max_emd;
  std::optional<double> min_purity;
  std::optional<double> min_coverage;
  ScoreWeights weights;
  int num_merged = 1;
  /// Survivors overlapping an already kept mask above this IoU are skipped.
  double dedup_iou = 0.95;
};

bool passes_thresholds(const ProposalScore& s, const SelectConfig& cfg);

struct ScoredProposal {
  PixelMask mask;
  ProposalScore score;
};

struct Selection {
  PixelMask merged;
  std::vector<int> kept;
};

/// Threshold filter, score ordering (ties: higher coverage, then input order),
/// near-duplicate skipping and union of the top `num_merged` masks.
Selection select_and_merge(std::span<const ScoredProposal> proposals, const SelectConfig& cfg);

}  // namespace matcher
