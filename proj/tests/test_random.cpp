#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "eigenrank/random.hpp"

using namespace eigenrank;

TEST_SUITE("random") {

TEST_CASE("streams are reproducible from their key") {
  Stream a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
}

TEST_CASE("derived seeds separate purposes and indices") {
  std::set<std::uint64_t> seen;
  for (const char* purpose : {"init", "train", "probe", "jitter"})
    for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(7, purpose, i));
  CHECK(seen.size() == 200);
  CHECK(derive_seed(7, "train", 3) == derive_seed(7, "train", 3));
  CHECK(derive_seed(7, "train", 3) != derive_seed(8, "train", 3));
}

TEST_CASE("hash_bytes depends on seed and content") {
  CHECK(hash_bytes(1, "case-0001") == hash_bytes(1, "case-0001"));
  CHECK(hash_bytes(1, "case-0001") != hash_bytes(2, "case-0001"));
  CHECK(hash_bytes(1, "case-0001") != hash_bytes(1, "case-0002"));
  CHECK(hash_bytes(1, "") != hash_bytes(1, std::string_view("\0", 1)));
}

TEST_CASE("uniform draws stay in range and look uniform") {
  Stream s(derive_seed(1, "uniform"));
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  for (int i = 0; i < 1000; ++i) {
    const double v = s.uniform(-2.0, 3.0);
    CHECK(v >= -2.0);
    CHECK(v < 3.0);
  }
}

TEST_CASE("below covers its range without bias") {
  Stream s(derive_seed(2, "below"));
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[s.below(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CHECK(s.below(1) == 0);
}

TEST_CASE("shuffle is a permutation") {
  Stream s(derive_seed(3, "shuffle"));
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  s.shuffle(w);
  CHECK(w != v);
  std::sort(w.begin(), w.end());
  CHECK(w == v);
}

}
