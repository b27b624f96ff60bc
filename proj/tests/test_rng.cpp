#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "ecan/rng.hpp"

using ecan::Rng;
using ecan::mix_seed;

TEST_CASE("same seed, same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c(42), d(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(c.uniform() == d.uniform());
    CHECK(c.normal() == d.normal());
    CHECK(c.below(17) == d.below(17));
  }
  CHECK(Rng(7).permutation(100) == Rng(7).permutation(100));
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u64() == b.next_u64()) ++same;
  CHECK(same == 0);
  CHECK(Rng(1).permutation(50) != Rng(2).permutation(50));
}

TEST_CASE("uniform ranges") {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform(-2.5, 4.0);
    CHECK(u >= -2.5);
    CHECK(u < 4.0);
  }
}

TEST_CASE("below stays in range and hits every value") {
  Rng rng(11);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t v = rng.below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  CHECK(rng.below(1) == 0);
}

TEST_CASE("permutation is a permutation") {
  Rng rng(5);
  for (std::size_t n : {std::size_t{1}, std::size_t{2}, std::size_t{33}, std::size_t{257}}) {
    std::vector<std::size_t> p = rng.permutation(n);
    REQUIRE(p.size() == n);
    std::vector<std::size_t> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> iota(n);
    std::iota(iota.begin(), iota.end(), std::size_t{0});
    CHECK(sorted == iota);
  }
  CHECK(rng.permutation(0).empty());
}

TEST_CASE("permutations are not identity-biased") {
  // Over many shuffles of [0, 10), element 0 should land away from slot 0
  // roughly 90% of the time.
  Rng rng(13);
  int moved = 0;
  const int trials = 2000;
  for (int t = 0; t < trials; ++t)
    if (rng.permutation(10)[0] != 0) ++moved;
  CHECK(moved > trials * 8 / 10);
}

TEST_CASE("normal moments") {
  Rng rng(0);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double stddev = std::sqrt(sum_sq / n - mean * mean);
  CHECK(std::fabs(mean) < 0.02);
  CHECK(std::fabs(stddev - 1.0) < 0.02);
}

TEST_CASE("mix_seed separates streams") {
  CHECK(mix_seed(1, 2, 3) != mix_seed(1, 2, 4));
  CHECK(mix_seed(1, 2, 3) != mix_seed(1, 3, 3));
  CHECK(mix_seed(1, 2, 3) != mix_seed(2, 2, 3));
  CHECK(mix_seed(0) != mix_seed(1));
  CHECK(mix_seed(5) == mix_seed(5, 0, 0));
  // Swapping arguments must not collide.
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
}
