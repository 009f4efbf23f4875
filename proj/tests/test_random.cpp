#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "evident/random.hpp"

using namespace evident;

TEST_SUITE("random") {

TEST_CASE("same seed gives identical draw sequences") {
  RandomStream a(12345), b(12345);
  for (int i = 0; i < 10000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
}

TEST_CASE("same seed gives identical mixed-call sequences") {
  RandomStream a(7), b(7);
  for (int i = 0; i < 2000; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
    CHECK(a.uniform_int(97) == b.uniform_int(97));
  }
}

TEST_CASE("uniform ranges") {
  RandomStream rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = rng.uniform(-2.0, 5.0);
    CHECK(v >= -2.0);
    CHECK(v < 5.0);
  }
}

TEST_CASE("uniform_int bounds and coverage") {
  RandomStream rng(2);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const std::uint64_t k = rng.uniform_int(7);
    REQUIRE(k < 7);
    hits[static_cast<std::size_t>(k)] += 1;
  }
  for (int h : hits) CHECK(h > 0);
  for (int i = 0; i < 100; ++i) CHECK(rng.uniform_int(1) == 0);
}

TEST_CASE("normal moments are sane") {
  RandomStream rng(3);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("split streams are deterministic and distinct") {
  RandomStream parent(99);
  RandomStream c0 = parent.split(0);
  RandomStream c1 = parent.split(1);
  RandomStream c0_again = parent.split(0);
  CHECK(c0.seed() == c0_again.seed());
  CHECK(c0.seed() != c1.seed());
  CHECK(c0.seed() != parent.seed());
  for (int i = 0; i < 100; ++i) CHECK(c0.next_u64() == c0_again.next_u64());

  // children evolve independently of the parent's own draws
  RandomStream p2(99);
  p2.uniform();
  p2.normal();
  RandomStream c0_late = p2.split(0);
  RandomStream fresh = RandomStream(99).split(0);
  for (int i = 0; i < 100; ++i) CHECK(c0_late.next_u64() == fresh.next_u64());
}

TEST_CASE("shuffle is a deterministic permutation") {
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  std::vector<int> w = v;

  std::vector<int> identity = v;
  RandomStream a(5), b(5);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  CHECK(v != identity);

  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

}  // TEST_SUITE
