#include "saflow/seeding.hpp"

#include <limits>
#include <random>
#include <stdexcept>

namespace saflow::seeding {

SeedSet greedy_k_center(Eigen::Index n, int k, const DistanceFn& dist,
                        std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("empty point set");
  if (k < 1 || static_cast<Eigen::Index>(k) > n)
    throw std::invalid_argument("seed count must lie in [1, n]");
  SeedSet out;
  out.indices.reserve(k);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  const Eigen::Index first = pick(rng);
  out.indices.push_back(first);

  std::vector<double> min_dist(n);
  std::vector<char> chosen(n, 0);
  chosen[first] = 1;
  for (Eigen::Index i = 0; i < n; ++i) min_dist[i] = dist(i, first);
  min_dist[first] = 0.0;

  for (int t = 1; t < k; ++t) {
    Eigen::Index best = -1;
    double best_val = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      if (min_dist[i] > best_val) {
        best_val = min_dist[i];
        best = i;
      }
    }
    out.indices.push_back(best);
    chosen[best] = 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (chosen[i]) { min_dist[i] = 0.0; continue; }
      const double d = dist(i, best);
      if (d < min_dist[i]) min_dist[i] = d;
    }
  }

  double radius = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (min_dist[i] > radius) radius = min_dist[i];
  out.radius = radius;
  return out;
}

SeedSet greedy_k_center(const affinity::FeatureSet& features, int k,
                        std::uint64_t seed) {
  if (features.metric != affinity::Metric::euclidean)
    throw std::invalid_argument("feature set must declare euclidean metric");
  const Eigen::MatrixXd& F = features.F;
  return greedy_k_center(
      F.rows(), k,
      [&F](Eigen::Index a, Eigen::Index b) {
        return (F.row(a) - F.row(b)).norm();
      },
      seed);
}

Eigen::MatrixXd seed_distances(Eigen::Index n, const SeedSet& seeds,
                               const DistanceFn& dist) {
  const Eigen::Index k = static_cast<Eigen::Index>(seeds.indices.size());
  if (k < 1) throw std::invalid_argument("empty seed set");
  Eigen::MatrixXd D(n, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < n; ++i) D(i, j) = dist(i, seeds.indices[j]);
  return D;
}

Eigen::MatrixXd seed_distances(const affinity::FeatureSet& features,
                               const SeedSet& seeds) {
  if (features.metric != affinity::Metric::euclidean)
    throw std::invalid_argument("feature set must declare euclidean metric");
  const Eigen::MatrixXd& F = features.F;
  return seed_distances(
      F.rows(), seeds,
      [&F](Eigen::Index a, Eigen::Index b) {
        return (F.row(a) - F.row(b)).norm();
      });
}

}  // namespace saflow::seeding
