#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "saflow/affinity.hpp"

// Greedy k-center seeding and the seed distance matrix the flow is
// initialized from.
namespace saflow::seeding {

using DistanceFn = std::function<double(Eigen::Index, Eigen::Index)>;

struct SeedSet {
  std::vector<Eigen::Index> indices;  // k distinct points
  double radius = 0.0;                // max over points of min seed distance
};

// Greedy farthest-point selection: the first center is a uniform draw from
// std::mt19937_64(seed); each later center maximizes the distance to the
// chosen set, ties going to the smallest index.  The covering radius of the
// result is at most twice the optimum.  O(n k) distance evaluations.
SeedSet greedy_k_center(Eigen::Index n, int k, const DistanceFn& dist,
                        std::uint64_t seed);

// Euclidean convenience wrapper.
SeedSet greedy_k_center(const affinity::FeatureSet& features, int k,
                        std::uint64_t seed);

// D(i, j) = dist(i, seeds.indices[j]); n x k, nonnegative, zero at seeds.
Eigen::MatrixXd seed_distances(Eigen::Index n, const SeedSet& seeds,
                               const DistanceFn& dist);

Eigen::MatrixXd seed_distances(const affinity::FeatureSet& features,
                               const SeedSet& seeds);

}  // namespace saflow::seeding
