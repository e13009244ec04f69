#pragma once

#include <Eigen/Dense>

#include "saflow/affinity.hpp"

// Self-assignment algebra on row-stochastic W (n x c, strictly positive):
// column masses C(W), the normalizer geodesic gamma_s(W) between C(W) and
// W^T W, the induced self-affinity A_s(W) = W gamma_s(W)^{-1} W^T, the
// correlation objective E_s(W) = tr(K A_s(W)), and its ambient gradient.
namespace saflow::selfassign {

// Column masses diag(C(W)) = W^T 1.  Sums to n.
Eigen::VectorXd cluster_mass(const Eigen::MatrixXd& W);

// Spectral data shared by gamma_s, its inverse, the objective, and the
// gradient.  M = C^{-1/2} W^T W C^{-1/2}; gamma_s = C^{1/2} M^s C^{1/2}.
// With pinv set, inversions drop eigenvalues <= 1e-10 * lambda_max.
struct GeodesicNormalizer {
  double s = 0.0;
  bool pinv = false;
  Eigen::VectorXd mass;        // c_j > 0
  Eigen::VectorXd mass_sqrt, mass_inv_sqrt;
  Eigen::MatrixXd gram;        // W^T W
  Eigen::MatrixXd eigvec;      // U with M = U diag(eigval) U^T
  Eigen::VectorXd eigval;      // ascending, clamped below at 0
  Eigen::VectorXd powered;     // eigval^s

  Eigen::MatrixXd gamma() const;
  Eigen::MatrixXd gamma_inverse() const;
};

GeodesicNormalizer geodesic_normalizer(const Eigen::MatrixXd& W, double s,
                                       bool pinv = false);

// Largest materialized n for A_s(W); above this only apply-form products.
inline constexpr Eigen::Index dense_materialization_threshold = 2048;

// A_s(W), materialized.  n <= dense_materialization_threshold.
Eigen::MatrixXd self_assignment(const Eigen::MatrixXd& W, double s,
                                bool pinv = false);

// A_s(W) * X without forming the n x n matrix.
Eigen::MatrixXd self_assignment_apply(const Eigen::MatrixXd& W, double s,
                                      const Eigen::MatrixXd& X,
                                      bool pinv = false);

// B(W) = C(W)^{-1} W^T W.  Row-stochastic; equals I on hard labelings;
// tr B(W) = tr A_0(W).
Eigen::MatrixXd cluster_confusion(const Eigen::MatrixXd& W);
double cluster_confusion_trace(const Eigen::MatrixXd& W);

// E_s(W) = tr(K A_s(W)), evaluated as tr(gamma_s^{-1} W^T (K W)) so only
// c x c factors and one K product appear.
double objective(const Eigen::MatrixXd& W, const affinity::AffinityOperator& K,
                 double s, bool pinv = false);

// Ambient (Euclidean) gradient dE_s/dW, n x c.  s = 0 and s = 1 use the
// closed forms; interior s differentiates M -> M^s through the symmetric
// eigendecomposition with first divided differences, where eigenvalue pairs
// with |l_i - l_j| < 1e-10 * l_max use the analytic limit s * l^(s-1) at the
// pair midpoint.
Eigen::MatrixXd grad_objective(const Eigen::MatrixXd& W,
                               const affinity::AffinityOperator& K, double s,
                               bool pinv = false);

// Condition number lambda_max / lambda_min of W^T W; +inf when singular.
double gram_condition(const Eigen::MatrixXd& W);

// ||(I - Y Y^T) K Y||_F with Y = W (W^T W)^{-1/2}; vanishes exactly when
// range(W) is K-invariant.  Requires full column rank.
double stiefel_stationarity_residual(const Eigen::MatrixXd& W,
                                     const affinity::AffinityOperator& K);

}  // namespace saflow::selfassign
