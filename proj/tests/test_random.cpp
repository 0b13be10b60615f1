#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "seqrep/errors.hpp"
#include "seqrep/random.hpp"

using namespace seqrep;

TEST_CASE("equal seed and stream give equal first 10^4 draws") {
  RandomSource a(42, 7), b(42, 7);
  for (int i = 0; i < 10000; ++i) REQUIRE(a.next_u64() == b.next_u64());
  CHECK(a.position() == 10000);
}

TEST_CASE("golden draws pin the generator across platforms") {
  RandomSource rng(0);
  const std::array<std::uint64_t, 3> first{rng.next_u64(), rng.next_u64(), rng.next_u64()};
  RandomSource again(0);
  for (auto v : first) CHECK(again.next_u64() == v);
  // Values recorded from the reference build; a change here breaks reproducibility of stored runs.
  RandomSource golden(1, 2);
  CHECK(golden.next_u64() == 3478163516762591011ULL);
}

TEST_CASE("different seeds or streams diverge") {
  RandomSource a(1), b(2), c(1, 1);
  std::set<std::uint64_t> seen{a.next_u64(), b.next_u64(), c.next_u64()};
  CHECK(seen.size() == 3);
}

TEST_CASE("children depend only on (seed, stream, id)") {
  RandomSource parent(9, 4);
  const RandomSource before = parent.child(3);
  for (int i = 0; i < 17; ++i) parent.next_u64();
  RandomSource after = parent.child(3);
  RandomSource b = before;
  for (int i = 0; i < 100; ++i) REQUIRE(b.next_u64() == after.next_u64());

  // Creation order is irrelevant.
  RandomSource x = RandomSource(9, 4).child(1);
  RandomSource y = RandomSource(9, 4).child(2);
  RandomSource y2 = RandomSource(9, 4).child(2);
  RandomSource x2 = RandomSource(9, 4).child(1);
  CHECK(x.next_u64() == x2.next_u64());
  CHECK(y.next_u64() == y2.next_u64());
  CHECK(RandomSource(9, 4).child(1).next_u64() != RandomSource(9, 4).child(2).next_u64());
}

TEST_CASE("uniform lies in [0,1) with the right mean") {
  RandomSource rng(5);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  const double se = std::sqrt(1.0 / 12.0 / n);
  CHECK(std::abs(sum / n - 0.5) < 5 * se);
}

TEST_CASE("uniform_index is unbiased over a small range") {
  RandomSource rng(8);
  CHECK_THROWS_AS(rng.uniform_index(0), UsageError);
  const int n = 70000, k = 7;
  std::vector<int> counts(k, 0);
  for (int i = 0; i < n; ++i) {
    const auto v = rng.uniform_index(k);
    REQUIRE(v < static_cast<std::uint64_t>(k));
    ++counts[v];
  }
  // Chi-square with 6 degrees of freedom; 22.46 is the 0.999 quantile.
  double chi2 = 0.0;
  const double expected = static_cast<double>(n) / k;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 22.46);
  CHECK(rng.uniform_index(1) == 0);
}

TEST_CASE("normal draws have unit variance and consume two draws") {
  RandomSource rng(13);
  const int n = 50000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto before = rng.position();
    const double z = rng.normal();
    REQUIRE(rng.position() == before + 2);
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 5.0 / std::sqrt(n));
  CHECK(std::abs(sq / n - mean * mean - 1.0) < 5.0 * std::sqrt(2.0 / n));
}
