#include <doctest.h>

#include "ddce/error.hpp"
#include "ddce/kmeans.hpp"
#include "ddce/metrics.hpp"
#include "support.hpp"

using namespace ddce;

TEST_SUITE("kmeans") {

TEST_CASE("inflated cluster count") {
  CHECK(inflated_cluster_count(100, 10, 100) == 40);  // s = 10, M = 100
  CHECK(inflated_cluster_count(100, 10, 3) == 3);
  CHECK(inflated_cluster_count(300, 10, 45) == 4 * 2);
  CHECK(inflated_cluster_count(10, 1, 0) == 0);
  CHECK_THROWS_AS(inflated_cluster_count(0, 0, 5), DataError);
}

TEST_CASE("separated blobs are recovered exactly") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto b = testing::blobs({{0, 0}, {10, 0}, {0, 10}}, 15, 0.3, seed);
    Rng rng = derive_stream(seed, {1});
    auto r = kmeans(b.x, 3, rng);
    CHECK(ari(b.labels, r.labels) == 1.0);
    CHECK(r.centers.size() == 6);
    CHECK(r.inertia > 0.0);
  }
}

TEST_CASE("kmeans is deterministic and handles k = n") {
  auto b = testing::blobs({{0, 0}, {5, 5}}, 4, 0.5, 3);
  Rng a = derive_stream(1, {1}), c = derive_stream(1, {1});
  CHECK(kmeans(b.x, 2, a).labels == kmeans(b.x, 2, c).labels);
  Rng d = derive_stream(1, {2});
  auto all = kmeans(b.x, 8, d);
  CHECK(all.inertia == doctest::Approx(0.0));
}

}  // TEST_SUITE
