#include <doctest.h>

#include <algorithm>
#include <set>

#include "matcher/error.hpp"
#include "matcher/rng.hpp"

using namespace matcher;

// Vectors computed by an independent Python implementation of splitmix64 and
// xoshiro256**.
TEST_CASE("splitmix64 reference output") {
  std::uint64_t state = 0;
  CHECK(splitmix64(state) == 0xe220a8397b1dcdafULL);
}

TEST_CASE("xoshiro256** sequence vectors") {
  Rng a(0);
  CHECK(a.next_u64() == 0x99ec5f36cb75f2b4ULL);
  CHECK(a.next_u64() == 0xbf6e1f784956452aULL);
  CHECK(a.next_u64() == 0x1a5f849d4933e6e0ULL);
  CHECK(a.next_u64() == 0x6aa594f1262d2d2cULL);
  Rng b(42);
  CHECK(b.next_u64() == 0x15780b2e0c2ec716ULL);
  CHECK(b.next_u64() == 0x6104d9866d113a7eULL);
  CHECK(b.next_u64() == 0xae17533239e499a1ULL);
  CHECK(b.next_u64() == 0xecb8ad4703b360a1ULL);
}

TEST_CASE("derived draws") {
  Rng u(7);
  CHECK(u.uniform01() == 0.7005764821796896);
  CHECK(u.uniform01() == 0.2787512294737843);
  CHECK(u.uniform01() == 0.8396274618764198);

  Rng r(7);
  std::vector<std::uint64_t> got;
  for (int i = 0; i < 8; ++i) got.push_back(r.below(10));
  CHECK(got == std::vector<std::uint64_t>{4, 4, 8, 4, 4, 1, 6, 6});

  Rng s(3);
  CHECK(s.sample_without_replacement(10, 4) == std::vector<int>{8, 2, 3, 1});

  CHECK(derive_seed(0, 1) == 0x2d0f28c7e7e786b2ULL);
  CHECK(derive_seed(123, 11) == 0xbf9edfb11bb74ea6ULL);
}

TEST_CASE("sampling without replacement is distinct and in range") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(30));
    const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(n) + 1));
    const auto v = rng.sample_without_replacement(n, k);
    CHECK(static_cast<int>(v.size()) == k);
    CHECK(std::set<int>(v.begin(), v.end()).size() == v.size());
    for (int x : v) CHECK((x >= 0 && x < n));
  }
  CHECK_THROWS_AS(rng.sample_without_replacement(3, 4), MatcherError);
  CHECK_THROWS_AS(rng.below(0), MatcherError);
}

TEST_CASE("uniform01 stays in [0, 1)") {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    CHECK((u >= 0.0 && u < 1.0));
  }
}
