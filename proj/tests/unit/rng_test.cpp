#include <algorithm>
#include <set>
#include <vector>

#include "doctest.h"
#include "respawn/rng.hpp"

using namespace respawn;

TEST_CASE("equal seeds give equal streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("split streams are independent of parent state") {
  Rng parent(42);
  Rng child_before = parent.split("child");
  parent.next();
  parent.next();
  Rng child_after = parent.split("child");
  CHECK(child_before.seed() == child_after.seed());
  CHECK(child_before.next() == child_after.next());
}

TEST_CASE("distinct labels give distinct streams") {
  Rng parent(42);
  CHECK(parent.split("a").seed() != parent.split("b").seed());
  CHECK(parent.split("x", 0).seed() != parent.split("x", 1).seed());
}

TEST_CASE("below stays in range and covers it") {
  Rng rng(7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t v = rng.below(5);
    CHECK(v < 5);
    seen.insert(v);
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("uniform01 lies in [0, 1)") {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("shuffle permutes") {
  Rng rng(11);
  std::vector<int> items(20);
  for (int i = 0; i < 20; ++i) items[static_cast<std::size_t>(i)] = i;
  std::vector<int> shuffled = items;
  rng.shuffle(shuffled);
  CHECK(shuffled != items);  // 20!-to-1 odds otherwise
  std::sort(shuffled.begin(), shuffled.end());
  CHECK(shuffled == items);
}
