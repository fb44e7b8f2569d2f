#pragma once

#include <span>
#include <vector>

#include "matcher/correspondence.hpp"
#include "matcher/tensor.hpp"

namespace matcher {

enum class MatchDirection {
  kBidirectional,
  kForwardOnly,
  /// Matches every target patch back to the reference, keeps those that land
  /// in the reference mask.
  kReverseOnly,
};

enum class MatchAssignment {
  /// Per-row argmax, many-to-one.
  kArgmax,
  /// Maximum-similarity one-to-one assignment (rows beyond the column count
  /// fall back to argmax).
  kOneToOne,
};

struct MatchOptions {
  MatchDirection direction = MatchDirection::kBidirectional;
  MatchAssignment assignment = MatchAssignment::kArgmax;
};

struct MatchRecord {
  PatchPoint ref_point;
  PatchPoint fwd_point;
  PatchPoint rev_point;
  bool retained = false;
};

struct MatchResult {
  /// Filtered target points, first occurrence order, no duplicates.
  std::vector<PatchPoint> matched;
  /// Raw forward matches, one per reference point.
  std::vector<PatchPoint> forward;
  std::vector<MatchRecord> records;
};

/// Argmax per row over a grid of `grid_width` columns; ties go to the
/// smallest flat index.
std::vector<PatchPoint> forward_match(const CorrespondenceMatrix& s_fwd, int grid_width);
std::vector<PatchPoint> reverse_match(const CorrespondenceMatrix& s_rev, int grid_width);

/// Column chosen for every row under a maximum-total-similarity one-to-one
/// assignment.
std::vector<int> one_to_one_assignment(const CorrespondenceMatrix& s);

/// Forward match of the reference mask patches into the target, reverse match
/// of those hits back into the reference, then keep forward points whose
/// reverse point lies on the mask. Throws EmptyMatch when nothing survives.
MatchResult bidirectional_match(const FeatureMap& z_ref, const FeatureMap& z_tgt,
                                std::span<const PatchPoint> ref_patches,
                                const MatchOptions& options = {});

}  // namespace matcher
