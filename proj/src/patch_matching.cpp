#include "matcher/patch_matching.hpp"

#include <algorithm>
#include <limits>
#include <unordered_set>

#include "matcher/error.hpp"

namespace matcher {

namespace {

int argmax_row(std::span<const float> row) {
  int best = 0;
  for (int j = 1; j < static_cast<int>(row.size()); ++j) {
    if (row[static_cast<std::size_t>(j)] > row[static_cast<std::size_t>(best)]) best = j;
  }
  return best;
}

std::vector<PatchPoint> argmax_match(const CorrespondenceMatrix& s, int grid_width) {
  if (s.cols() < 1) fail(ErrorCode::kInvalidArgument, "match over an empty grid");
  if (grid_width < 1 || s.cols() % grid_width != 0) {
    fail(ErrorCode::kDimMismatch, "grid width does not divide the candidate count");
  }
  std::vector<PatchPoint> out;
  out.reserve(static_cast<std::size_t>(s.rows()));
  for (int i = 0; i < s.rows(); ++i) {
    out.push_back(PatchPoint::from_flat(argmax_row(s.row(i)), grid_width));
  }
  return out;
}

// Shortest augmenting path assignment (Kuhn-Munkres with potentials) for
// rows <= cols, minimising sum of cost(i, j) = -similarity.
std::vector<int> hungarian_rows_le_cols(const CorrespondenceMatrix& s) {
  const int n = s.rows();
  const int m = s.cols();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<int> owner(static_cast<std::size_t>(m) + 1, 0);  // column -> row (1-based)
  std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    owner[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = owner[static_cast<std::size_t>(j0)];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cost = -static_cast<double>(s(i0 - 1, j - 1));
        const double cur = cost - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(owner[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (owner[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      owner[static_cast<std::size_t>(j0)] = owner[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j) {
    if (owner[static_cast<std::size_t>(j)] != 0) {
      col_of_row[static_cast<std::size_t>(owner[static_cast<std::size_t>(j)] - 1)] = j - 1;
    }
  }
  return col_of_row;
}

std::vector<PatchPoint> assign(const CorrespondenceMatrix& s, int grid_width,
                               MatchAssignment mode) {
  if (mode == MatchAssignment::kArgmax) return argmax_match(s, grid_width);
  const auto cols = one_to_one_assignment(s);
  std::vector<PatchPoint> out;
  out.reserve(cols.size());
  for (int c : cols) out.push_back(PatchPoint::from_flat(c, grid_width));
  return out;
}

std::vector<PatchPoint> dedup_first(std::span<const PatchPoint> points) {
  std::vector<PatchPoint> out;
  std::unordered_set<int> seen;
  for (const auto& p : points) {
    if (seen.insert(p.flat).second) out.push_back(p);
  }
  return out;
}

}  // namespace

std::vector<PatchPoint> forward_match(const CorrespondenceMatrix& s_fwd, int grid_width) {
  return argmax_match(s_fwd, grid_width);
}

std::vector<PatchPoint> reverse_match(const CorrespondenceMatrix& s_rev, int grid_width) {
  return argmax_match(s_rev, grid_width);
}

std::vector<int> one_to_one_assignment(const CorrespondenceMatrix& s) {
  if (s.rows() == 0) return {};
  if (s.cols() < 1) fail(ErrorCode::kInvalidArgument, "assignment over an empty grid");
  if (s.rows() <= s.cols()) return hungarian_rows_le_cols(s);
  // More rows than columns: assign every column a distinct row, the rest take
  // their argmax.
  const auto row_of_col = hungarian_rows_le_cols(s.transposed());
  std::vector<int> out(static_cast<std::size_t>(s.rows()), -1);
  for (int j = 0; j < s.cols(); ++j) out[static_cast<std::size_t>(row_of_col[static_cast<std::size_t>(j)])] = j;
  for (int i = 0; i < s.rows(); ++i) {
    if (out[static_cast<std::size_t>(i)] < 0) out[static_cast<std::size_t>(i)] = argmax_row(s.row(i));
  }
  return out;
}

MatchResult bidirectional_match(const FeatureMap& z_ref, const FeatureMap& z_tgt,
                                std::span<const PatchPoint> ref_patches,
                                const MatchOptions& options) {
  if (ref_patches.empty()) fail(ErrorCode::kInvalidArgument, "reference patch set is empty");
  if (z_ref.channels() != z_tgt.channels()) {
    fail(ErrorCode::kDimMismatch, "reference and target channel counts differ");
  }
  std::vector<char> on_mask(static_cast<std::size_t>(z_ref.num_patches()), 0);
  for (const auto& p : ref_patches) {
    if (p.flat < 0 || p.flat >= z_ref.num_patches()) {
      fail(ErrorCode::kIndexOutOfRange, "reference patch " + std::to_string(p.flat));
    }
    on_mask[static_cast<std::size_t>(p.flat)] = 1;
  }

  MatchResult result;
  if (options.direction == MatchDirection::kReverseOnly) {
    const auto s_rev = cosine_sim_matrix(FeatureRows::of(z_tgt), FeatureRows::of(z_ref));
    const auto rev = assign(s_rev, z_ref.width(), options.assignment);
    std::vector<PatchPoint> kept;
    for (int j = 0; j < z_tgt.num_patches(); ++j) {
      const auto tgt = PatchPoint::from_flat(j, z_tgt.width());
      const auto& r = rev[static_cast<std::size_t>(j)];
      const bool retained = on_mask[static_cast<std::size_t>(r.flat)] != 0;
      result.records.push_back({r, tgt, r, retained});
      if (retained) kept.push_back(tgt);
    }
    result.matched = std::move(kept);
  } else {
    const auto ref_feats = gather_features(z_ref, ref_patches);
    const auto s_fwd =
        cosine_sim_matrix(FeatureRows::of(ref_feats, z_ref.channels()), FeatureRows::of(z_tgt));
    result.forward = assign(s_fwd, z_tgt.width(), options.assignment);

    std::vector<PatchPoint> rev(result.forward.size());
    if (options.direction == MatchDirection::kBidirectional) {
      const auto fwd_feats = gather_features(z_tgt, result.forward);
      const auto s_rev =
          cosine_sim_matrix(FeatureRows::of(fwd_feats, z_tgt.channels()), FeatureRows::of(z_ref));
      rev = assign(s_rev, z_ref.width(), options.assignment);
    } else {
      std::copy(ref_patches.begin(), ref_patches.end(), rev.begin());
    }

    std::vector<PatchPoint> kept;
    for (std::size_t i = 0; i < ref_patches.size(); ++i) {
      const bool retained = on_mask[static_cast<std::size_t>(rev[i].flat)] != 0;
      result.records.push_back({ref_patches[i], result.forward[i], rev[i], retained});
      if (retained) kept.push_back(result.forward[i]);
    }
    result.matched = dedup_first(kept);
  }
  if (result.matched.empty()) {
    fail(ErrorCode::kEmptyMatch, "no match survived the reverse-consistency filter");
  }
  return result;
}

}  // namespace matcher
