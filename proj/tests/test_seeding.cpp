#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "saflow/seeding.hpp"
#include "test_support.hpp"

using namespace saflow::seeding;
using saflow::affinity::FeatureSet;
using saflow::affinity::Metric;

namespace {

DistanceFn euclidean_of(const Eigen::MatrixXd& F) {
  return [&F](Eigen::Index a, Eigen::Index b) {
    return (F.row(a) - F.row(b)).norm();
  };
}

}  // namespace

TEST_CASE("selecting every point covers with radius zero") {
  std::mt19937_64 rng(51);
  const Eigen::MatrixXd F = testsupport::random_features(7, 2, rng);
  const SeedSet seeds = greedy_k_center(7, 7, euclidean_of(F), 3);
  CHECK(seeds.indices.size() == 7);
  CHECK(seeds.radius == 0.0);
}

TEST_CASE("a single seed covers with the max distance to it") {
  std::mt19937_64 rng(52);
  const Eigen::MatrixXd F = testsupport::random_features(9, 2, rng);
  const auto dist = euclidean_of(F);
  const SeedSet seeds = greedy_k_center(9, 1, dist, 4);
  REQUIRE(seeds.indices.size() == 1);
  double expected = 0.0;
  for (Eigen::Index p = 0; p < 9; ++p)
    expected = std::max(expected, dist(p, seeds.indices[0]));
  CHECK(seeds.radius == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("greedy covering radius is within twice the optimum") {
  std::mt19937_64 rng(53);
  for (int round = 0; round < 40; ++round) {
    const Eigen::Index n = 4 + static_cast<Eigen::Index>(rng() % 7);
    const int k = 1 + static_cast<int>(rng() % 4);
    if (static_cast<Eigen::Index>(k) > n) continue;
    const Eigen::MatrixXd F = testsupport::random_features(n, 2, rng);
    const auto dist = euclidean_of(F);
    const SeedSet seeds = greedy_k_center(n, k, dist, rng());
    const double optimum = testsupport::exact_k_center_radius(n, k, dist);
    CHECK(seeds.radius <= 2.0 * optimum + 1e-12);
  }
}

TEST_CASE("seeding is deterministic in the seed and validates inputs") {
  std::mt19937_64 rng(54);
  const Eigen::MatrixXd F = testsupport::random_features(20, 3, rng);
  const FeatureSet fs{F, Metric::euclidean};
  const SeedSet a = greedy_k_center(fs, 5, 99);
  const SeedSet b = greedy_k_center(fs, 5, 99);
  CHECK(a.indices == b.indices);
  CHECK(a.radius == b.radius);
  CHECK_THROWS_AS(greedy_k_center(3, 4, euclidean_of(F), 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(greedy_k_center(3, 0, euclidean_of(F), 0),
                  std::invalid_argument);
}

TEST_CASE("seed distance matrix on the 1-D three-point instance") {
  Eigen::MatrixXd F(3, 1);
  F << 0.0, 1.0, 2.0;
  SeedSet seeds;
  seeds.indices = {0, 2};
  const Eigen::MatrixXd D = seed_distances(3, seeds, euclidean_of(F));
  Eigen::MatrixXd expected(3, 2);
  expected << 0, 2, 1, 1, 2, 0;
  CHECK((D - expected).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("seed distances vanish at their own seed and are nonnegative") {
  std::mt19937_64 rng(55);
  const Eigen::MatrixXd F = testsupport::random_features(15, 3, rng);
  const FeatureSet fs{F, Metric::euclidean};
  const SeedSet seeds = greedy_k_center(fs, 4, 1);
  const Eigen::MatrixXd D = seed_distances(fs, seeds);
  REQUIRE(D.rows() == 15);
  REQUIRE(D.cols() == 4);
  CHECK(D.minCoeff() >= 0.0);
  for (int j = 0; j < 4; ++j) CHECK(D(seeds.indices[j], j) == 0.0);
}
