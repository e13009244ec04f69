#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "saflow/affinity.hpp"
#include "saflow/selfassign.hpp"

// Shared generators and independent oracles for the test binaries.
namespace testsupport {

// Strictly positive row-stochastic matrix; exponential draws per row keep
// every entry well inside the simplex.
inline Eigen::MatrixXd random_interior_w(Eigen::Index n, Eigen::Index c,
                                         std::mt19937_64& rng) {
  std::exponential_distribution<double> draw(1.0);
  Eigen::MatrixXd W(n, c);
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < c; ++j) {
      W(i, j) = draw(rng) + 1e-3;
      sum += W(i, j);
    }
    W.row(i) /= sum;
  }
  return W;
}

inline Eigen::MatrixXd random_features(Eigen::Index n, Eigen::Index d,
                                       std::mt19937_64& rng) {
  std::normal_distribution<double> draw(0.0, 1.0);
  Eigen::MatrixXd F(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) F(i, j) = draw(rng);
  return F;
}

// Gaussian kernel of random features: symmetric PSD with unit diagonal.
inline Eigen::MatrixXd random_psd_kernel(Eigen::Index n,
                                         std::mt19937_64& rng) {
  const Eigen::MatrixXd F = random_features(n, 3, rng);
  return saflow::affinity::gaussian_kernel({F, saflow::affinity::Metric::euclidean},
                                           1.5)
      .dense();
}

// Central finite differences of the self-assignment objective on ambient
// matrix entries; the independent check for the analytic gradient.
inline Eigen::MatrixXd fd_gradient(const Eigen::MatrixXd& W,
                                   const Eigen::MatrixXd& K, double s,
                                   double delta = 1e-5) {
  const auto op = saflow::affinity::AffinityOperator::exact(K);
  Eigen::MatrixXd G(W.rows(), W.cols());
  Eigen::MatrixXd Wp = W;
  for (Eigen::Index i = 0; i < W.rows(); ++i)
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      Wp(i, j) = W(i, j) + delta;
      const double up = saflow::selfassign::objective(Wp, op, s);
      Wp(i, j) = W(i, j) - delta;
      const double dn = saflow::selfassign::objective(Wp, op, s);
      Wp(i, j) = W(i, j);
      G(i, j) = (up - dn) / (2.0 * delta);
    }
  return G;
}

// Smallest covering radius over every k-subset of {0..n-1}; exponential in
// n, intended for n <= 10.
inline double exact_k_center_radius(
    Eigen::Index n, int k,
    const std::function<double(Eigen::Index, Eigen::Index)>& dist) {
  std::vector<int> pick(static_cast<size_t>(k));
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int, Eigen::Index)> rec = [&](int depth,
                                                   Eigen::Index start) {
    if (depth == k) {
      double radius = 0.0;
      for (Eigen::Index p = 0; p < n; ++p) {
        double nearest = std::numeric_limits<double>::infinity();
        for (int t = 0; t < k; ++t)
          nearest = std::min(nearest, dist(p, pick[static_cast<size_t>(t)]));
        radius = std::max(radius, nearest);
      }
      best = std::min(best, radius);
      return;
    }
    for (Eigen::Index v = start; v < n; ++v) {
      pick[static_cast<size_t>(depth)] = static_cast<int>(v);
      rec(depth + 1, v + 1);
    }
  };
  rec(0, 0);
  return best;
}

// Hard assignment of a two-sided partition given by a bitmask; columns must
// both be inhabited.
inline Eigen::MatrixXd partition_matrix(Eigen::Index n, unsigned mask) {
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) W(i, (mask >> i) & 1u ? 1 : 0) = 1.0;
  return W;
}

// Best two-block partition of the vertices under the s = 0 objective,
// by exhaustive enumeration.  Returns the per-vertex side assignment.
inline std::vector<int> best_two_partition(const Eigen::MatrixXd& K) {
  const Eigen::Index n = K.rows();
  const auto op = saflow::affinity::AffinityOperator::exact(K);
  double best = -std::numeric_limits<double>::infinity();
  unsigned best_mask = 1;
  for (unsigned mask = 1; mask < (1u << n) - 1u; ++mask) {
    const Eigen::MatrixXd W = partition_matrix(n, mask);
    const double value = saflow::selfassign::objective(W, op, 0.0);
    if (value > best) {
      best = value;
      best_mask = mask;
    }
  }
  std::vector<int> side(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    side[static_cast<size_t>(i)] = (best_mask >> i) & 1u ? 1 : 0;
  return side;
}

}  // namespace testsupport
