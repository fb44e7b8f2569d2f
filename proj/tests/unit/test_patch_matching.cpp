#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "matcher/correspondence.hpp"
#include "matcher/error.hpp"
#include "matcher/patch_matching.hpp"
#include "random_instances.hpp"

using namespace matcher;

namespace {

// Exhaustive argmax with the smallest-index tie rule.
int brute_argmax(std::span<const float> row) {
  int best = 0;
  for (int j = 1; j < static_cast<int>(row.size()); ++j) {
    if (row[static_cast<std::size_t>(j)] > row[static_cast<std::size_t>(best)]) best = j;
  }
  return best;
}

std::vector<int> flats(std::span<const PatchPoint> ps) {
  std::vector<int> out;
  for (const auto& p : ps) out.push_back(p.flat);
  return out;
}

}  // namespace

TEST_CASE("forward match: argmax and tie-break") {
  const CorrespondenceMatrix s(1, 3, {0.1f, 0.9f, 0.3f});
  const auto p = forward_match(s, 3);
  REQUIRE(p.size() == 1);
  CHECK(p[0] == PatchPoint::from_rc(0, 1, 3));
  CHECK(forward_match(CorrespondenceMatrix(1, 2, {0.5f, 0.5f}), 2)[0].flat == 0);

  const CorrespondenceMatrix two(2, 4, {0.1f, 0.2f, 0.9f, 0.0f, 0.8f, 0.1f, 0.3f, 0.2f});
  const auto q = forward_match(two, 2);
  CHECK(q[0] == PatchPoint::from_rc(1, 0, 2));
  CHECK(q[1] == PatchPoint::from_rc(0, 0, 2));
}

TEST_CASE("reverse match: single column and brute-force agreement") {
  CHECK(reverse_match(CorrespondenceMatrix(2, 1, {-0.9f, 0.2f}), 1)[1].flat == 0);
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<float> v(3 * 6);
    for (auto& x : v) x = static_cast<float>(std::round(rng.uniform01() * 4.0) / 4.0);  // frequent ties
    const CorrespondenceMatrix s(3, 6, v);
    const auto r = reverse_match(s, 3);
    for (int i = 0; i < 3; ++i) CHECK(r[static_cast<std::size_t>(i)].flat == brute_argmax(s.row(i)));
  }
}

TEST_CASE("identity image recovers the reference patches") {
  Rng rng(2);
  const auto z = testing::random_features(rng, 5, 5, 8);
  const std::vector<PatchPoint> ref{PatchPoint::from_flat(3, 5), PatchPoint::from_flat(7, 5), PatchPoint::from_flat(12, 5)};
  const auto m = bidirectional_match(z, z, ref);
  CHECK(m.matched == ref);
}

TEST_CASE("hand-built 3x3 case: an outlier whose reverse lands off-mask is dropped") {
  // Reference: mask patches 0 (a) and 1 (b); off-mask patch 8 is d.
  // Target: patch 4 holds a, patch 5 holds d' which b matches best forward
  // but whose reverse goes to d (off-mask).
  const std::vector<float> a{1, 0, 0};
  const std::vector<float> b{0.6f, 0.8f, 0};
  const std::vector<float> d{0, 0.8f, 0.6f};
  const std::vector<float> dp{0, 0.9f, 0.44f};
  const std::vector<float> bg{0, 0, -1};
  std::vector<float> ref;
  std::vector<float> tgt;
  for (int i = 0; i < 9; ++i) {
    const auto& r = i == 0 ? a : i == 1 ? b : i == 8 ? d : bg;
    const auto& t = i == 4 ? a : i == 5 ? dp : bg;
    ref.insert(ref.end(), r.begin(), r.end());
    tgt.insert(tgt.end(), t.begin(), t.end());
  }
  const FeatureMap zr(3, 3, 3, ref);
  const FeatureMap zt(3, 3, 3, tgt);
  const std::vector<PatchPoint> mask{PatchPoint::from_flat(0, 3), PatchPoint::from_flat(1, 3)};

  // Brute-force both argmax passes.
  const auto s_fwd = cosine_sim_matrix(FeatureRows::of(gather_features(zr, mask), 3), FeatureRows::of(zt));
  const int f0 = brute_argmax(s_fwd.row(0));
  const int f1 = brute_argmax(s_fwd.row(1));
  REQUIRE(f0 == 4);
  REQUIRE(f1 == 5);
  const auto s_rev = cosine_sim_matrix(FeatureRows::of(zt), FeatureRows::of(zr));
  REQUIRE(brute_argmax(s_rev.row(4)) == 0);
  REQUIRE(brute_argmax(s_rev.row(5)) == 8);

  const auto m = bidirectional_match(zr, zt, mask);
  CHECK(flats(m.matched) == std::vector<int>{4});
  CHECK(flats(m.forward) == std::vector<int>{4, 5});
  CHECK_FALSE(m.records[1].retained);

  MatchOptions fwd_only;
  fwd_only.direction = MatchDirection::kForwardOnly;
  CHECK(flats(bidirectional_match(zr, zt, mask, fwd_only).matched) == std::vector<int>{4, 5});
}

TEST_CASE("no consistent match raises EmptyMatch") {
  // Every target patch is closest to the off-mask reference patch.
  const FeatureMap zr(1, 2, 2, {1, 0, 0, 1});
  const FeatureMap zt(1, 2, 2, {0.1f, 1, 0, 1});
  try {
    bidirectional_match(zr, zt, std::vector<PatchPoint>{PatchPoint::from_flat(0, 2)});
    FAIL("expected EmptyMatch");
  } catch (const MatcherError& e) {
    CHECK(e.code() == ErrorCode::kEmptyMatch);
  }
}

TEST_CASE("bad inputs") {
  const FeatureMap z(2, 2, 2, std::vector<float>(8, 1.0f));
  const FeatureMap other(2, 2, 3, std::vector<float>(12, 1.0f));
  CHECK_THROWS_AS(bidirectional_match(z, z, std::vector<PatchPoint>{}), MatcherError);
  CHECK_THROWS_AS(bidirectional_match(z, other, std::vector<PatchPoint>{PatchPoint::from_flat(0, 2)}), MatcherError);
  CHECK_THROWS_AS(bidirectional_match(z, z, std::vector<PatchPoint>{PatchPoint::from_flat(4, 2)}), MatcherError);
}

TEST_CASE("soundness, subset, dedup and determinism on random pairs") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto zr = testing::random_features(rng, 4, 5, 6);
    const auto zt = testing::random_features(rng, 5, 4, 6);
    const auto picks = rng.sample_without_replacement(20, 1 + static_cast<int>(rng.below(10)));
    std::vector<PatchPoint> ref;
    for (int f : picks) ref.push_back(PatchPoint::from_flat(f, 5));
    std::set<int> ref_set(picks.begin(), picks.end());
    MatchResult m;
    try {
      m = bidirectional_match(zr, zt, ref);
    } catch (const MatcherError& e) {
      CHECK(e.code() == ErrorCode::kEmptyMatch);
      continue;
    }
    for (const auto& r : m.records) {
      if (r.retained) CHECK(ref_set.contains(r.rev_point.flat));
    }
    const auto fwd = flats(m.forward);
    const std::set<int> fwd_set(fwd.begin(), fwd.end());
    const auto hat = flats(m.matched);
    CHECK(std::set<int>(hat.begin(), hat.end()).size() == hat.size());
    for (int f : hat) CHECK(fwd_set.contains(f));
    CHECK(flats(bidirectional_match(zr, zt, ref).matched) == hat);

    MatchOptions fo;
    fo.direction = MatchDirection::kForwardOnly;
    CHECK(bidirectional_match(zr, zt, ref, fo).matched.size() >= hat.size());
  }
}

TEST_CASE("reverse-only keeps target patches that land on the mask") {
  Rng rng(4);
  const auto z = testing::random_features(rng, 3, 3, 5);
  MatchOptions ro;
  ro.direction = MatchDirection::kReverseOnly;
  const std::vector<PatchPoint> ref{PatchPoint::from_flat(2, 3), PatchPoint::from_flat(6, 3)};
  CHECK(flats(bidirectional_match(z, z, ref, ro).matched) == std::vector<int>{2, 6});
}

TEST_CASE("one-to-one assignment maximizes total similarity") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = 1 + static_cast<int>(rng.below(5));
    const int cols = rows + static_cast<int>(rng.below(3));
    std::vector<float> v(static_cast<std::size_t>(rows) * cols);
    for (auto& x : v) x = static_cast<float>(rng.uniform01());
    const CorrespondenceMatrix s(rows, cols, v);
    const auto a = one_to_one_assignment(s);
    CHECK(std::set<int>(a.begin(), a.end()).size() == a.size());
    double got = 0.0;
    for (int i = 0; i < rows; ++i) got += s(i, a[static_cast<std::size_t>(i)]);
    // Exhaustive search over injective maps.
    std::vector<int> cols_idx(static_cast<std::size_t>(cols));
    std::iota(cols_idx.begin(), cols_idx.end(), 0);
    double best = -1e9;
    do {
      double t = 0.0;
      for (int i = 0; i < rows; ++i) t += s(i, cols_idx[static_cast<std::size_t>(i)]);
      best = std::max(best, t);
    } while (std::next_permutation(cols_idx.begin(), cols_idx.end()));
    CHECK(got == doctest::Approx(best).epsilon(1e-9));
  }
}
