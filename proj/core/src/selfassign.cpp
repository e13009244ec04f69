#include "saflow/selfassign.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace saflow::selfassign {

namespace {

constexpr double kPinvCut = 1e-10;   // relative eigenvalue cutoff when pinv
constexpr double kSingularCut = 1e-14;
constexpr double kPairCut = 1e-10;   // divided-difference degeneracy cutoff

void check_assignment(const Eigen::MatrixXd& W) {
  if (W.rows() < 1 || W.cols() < 1)
    throw std::invalid_argument("assignment matrix must be nonempty");
}

// Symmetric eigendecomposition of W^T W with policy-dependent inverse.
struct GramInverse {
  Eigen::MatrixXd inv;
};

GramInverse gram_inverse(const Eigen::MatrixXd& gram, bool pinv) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
  const double lmax = lam.maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(lam.size());
  if (pinv) {
    const double cut = kPinvCut * lmax;
    for (Eigen::Index i = 0; i < lam.size(); ++i)
      if (lam[i] > cut) inv[i] = 1.0 / lam[i];
  } else {
    if (!(lmax > 0.0) || lam.minCoeff() <= kSingularCut * lmax)
      throw std::domain_error("W^T W is numerically singular");
    inv = lam.cwiseInverse();
  }
  return {eig.eigenvectors() * inv.asDiagonal() *
          eig.eigenvectors().transpose()};
}

}  // namespace

Eigen::VectorXd cluster_mass(const Eigen::MatrixXd& W) {
  check_assignment(W);
  return W.colwise().sum().transpose();
}

GeodesicNormalizer geodesic_normalizer(const Eigen::MatrixXd& W, double s,
                                       bool pinv) {
  if (s < 0.0 || s > 1.0)
    throw std::invalid_argument("geodesic parameter must lie in [0, 1]");
  check_assignment(W);
  GeodesicNormalizer g;
  g.s = s;
  g.pinv = pinv;
  g.mass = cluster_mass(W);
  if (!(g.mass.array() > 0.0).all())
    throw std::domain_error("every column needs positive mass");
  g.mass_sqrt = g.mass.cwiseSqrt();
  g.mass_inv_sqrt = g.mass_sqrt.cwiseInverse();
  g.gram = W.transpose() * W;
  Eigen::MatrixXd M = g.mass_inv_sqrt.asDiagonal() * g.gram *
                      g.mass_inv_sqrt.asDiagonal();
  M = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  g.eigvec = eig.eigenvectors();
  g.eigval = eig.eigenvalues().cwiseMax(0.0);
  g.powered.resize(g.eigval.size());
  for (Eigen::Index i = 0; i < g.eigval.size(); ++i)
    g.powered[i] = (s == 0.0) ? 1.0 : std::pow(g.eigval[i], s);
  return g;
}

Eigen::MatrixXd GeodesicNormalizer::gamma() const {
  return mass_sqrt.asDiagonal() *
         (eigvec * powered.asDiagonal() * eigvec.transpose()) *
         mass_sqrt.asDiagonal();
}

Eigen::MatrixXd GeodesicNormalizer::gamma_inverse() const {
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(powered.size());
  if (s == 0.0) {
    inv.setOnes();
  } else {
    const double lmax = eigval.maxCoeff();
    if (pinv) {
      const double cut = kPinvCut * lmax;
      for (Eigen::Index i = 0; i < powered.size(); ++i)
        if (eigval[i] > cut) inv[i] = 1.0 / powered[i];
    } else {
      if (!(lmax > 0.0) || eigval.minCoeff() <= kSingularCut * lmax)
        throw std::domain_error("singular normalizer; rank-deficient W with s > 0");
      inv = powered.cwiseInverse();
    }
  }
  return mass_inv_sqrt.asDiagonal() *
         (eigvec * inv.asDiagonal() * eigvec.transpose()) *
         mass_inv_sqrt.asDiagonal();
}

Eigen::MatrixXd self_assignment(const Eigen::MatrixXd& W, double s, bool pinv) {
  if (W.rows() > dense_materialization_threshold)
    throw std::length_error("self-affinity too large to materialize");
  Eigen::MatrixXd gi = geodesic_normalizer(W, s, pinv).gamma_inverse();
  return W * gi * W.transpose();
}

Eigen::MatrixXd self_assignment_apply(const Eigen::MatrixXd& W, double s,
                                      const Eigen::MatrixXd& X, bool pinv) {
  if (X.rows() != W.rows()) throw std::invalid_argument("dimension mismatch");
  Eigen::MatrixXd gi = geodesic_normalizer(W, s, pinv).gamma_inverse();
  return W * (gi * (W.transpose() * X));
}

Eigen::MatrixXd cluster_confusion(const Eigen::MatrixXd& W) {
  Eigen::VectorXd mass = cluster_mass(W);
  if (!(mass.array() > 0.0).all())
    throw std::domain_error("every column needs positive mass");
  return mass.cwiseInverse().asDiagonal() * (W.transpose() * W);
}

double cluster_confusion_trace(const Eigen::MatrixXd& W) {
  return cluster_confusion(W).trace();
}

double objective(const Eigen::MatrixXd& W, const affinity::AffinityOperator& K,
                 double s, bool pinv) {
  Eigen::MatrixXd KW = K.apply(W);
  Eigen::MatrixXd H = W.transpose() * KW;
  Eigen::MatrixXd gi = geodesic_normalizer(W, s, pinv).gamma_inverse();
  return (gi * H).trace();
}

Eigen::MatrixXd grad_objective(const Eigen::MatrixXd& W,
                               const affinity::AffinityOperator& K, double s,
                               bool pinv) {
  check_assignment(W);
  Eigen::MatrixXd KW = K.apply(W);
  Eigen::MatrixXd H = W.transpose() * KW;

  if (s == 0.0) {
    Eigen::VectorXd mass = cluster_mass(W);
    if (!(mass.array() > 0.0).all())
      throw std::domain_error("every column needs positive mass");
    Eigen::VectorXd cinv = mass.cwiseInverse();
    Eigen::MatrixXd theta = cinv.asDiagonal() * H * cinv.asDiagonal();
    Eigen::MatrixXd grad = 2.0 * KW * cinv.asDiagonal();
    grad.rowwise() -= theta.diagonal().transpose();
    return grad;
  }

  if (s == 1.0) {
    Eigen::MatrixXd gram = W.transpose() * W;
    Eigen::MatrixXd ginv = gram_inverse(gram, pinv).inv;
    return 2.0 * KW * ginv - 2.0 * W * (ginv * H * ginv);
  }

  // Interior s.  With gamma = C^{1/2} M^s C^{1/2}, M = C^{-1/2} G C^{-1/2},
  // the chain rule through dC, dG and d(M^s) collects into
  //   dE = 2 K W gamma^{-1} - 1_n (a1 + a2)^T - 2 W S
  // where, writing Theta = gamma^{-1} H gamma^{-1}, P = M^s,
  // R = U (Gamma o U^T C^{1/2} Theta C^{1/2} U) U^T with Gamma the first
  // divided differences of l -> l^s, and S = C^{-1/2} R C^{-1/2}:
  //   a1_j = (P C^{1/2} Theta)_jj / sqrt(c_j)
  //   a2_j = -(G C^{-1/2} R)_jj / c_j^{3/2}.
  // At s = 0 this collapses to the first branch, at s = 1 to the second.
  GeodesicNormalizer g = geodesic_normalizer(W, s, pinv);
  Eigen::MatrixXd gi = g.gamma_inverse();
  Eigen::MatrixXd theta = gi * H * gi;
  Eigen::MatrixXd grad = 2.0 * KW * gi;

  const Eigen::Index c = W.cols();
  const double lmax = g.eigval.maxCoeff();
  const double pair_cut = kPairCut * lmax;
  const double lam_floor = g.pinv ? pair_cut : 0.0;
  Eigen::MatrixXd dd(c, c);
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      const double li = g.eigval[i], lj = g.eigval[j];
      if (std::abs(li - lj) < pair_cut) {
        const double mid = std::max(0.5 * (li + lj), lam_floor);
        dd(i, j) = s * std::pow(mid, s - 1.0);
      } else {
        dd(i, j) = (g.powered[i] - g.powered[j]) / (li - lj);
      }
    }
  }

  Eigen::MatrixXd P = g.eigvec * g.powered.asDiagonal() * g.eigvec.transpose();
  Eigen::MatrixXd Q = g.mass_sqrt.asDiagonal() * theta *
                      g.mass_sqrt.asDiagonal();
  Eigen::MatrixXd R = g.eigvec *
                      (dd.cwiseProduct(g.eigvec.transpose() * Q * g.eigvec)) *
                      g.eigvec.transpose();
  Eigen::MatrixXd S = g.mass_inv_sqrt.asDiagonal() * R *
                      g.mass_inv_sqrt.asDiagonal();

  Eigen::VectorXd a1 =
      (P * g.mass_sqrt.asDiagonal() * theta).diagonal().cwiseProduct(
          g.mass_inv_sqrt);
  Eigen::VectorXd a2 =
      -(g.gram * g.mass_inv_sqrt.asDiagonal() * R).diagonal().cwiseProduct(
          g.mass.array().pow(-1.5).matrix());

  grad.noalias() -= 2.0 * W * S;
  grad.rowwise() -= (a1 + a2).transpose();
  return grad;
}

double gram_condition(const Eigen::MatrixXd& W) {
  check_assignment(W);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(W.transpose() * W);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmin > 0.0)) return std::numeric_limits<double>::infinity();
  return lmax / lmin;
}

double stiefel_stationarity_residual(const Eigen::MatrixXd& W,
                                     const affinity::AffinityOperator& K) {
  check_assignment(W);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(W.transpose() * W);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  Eigen::VectorXd lam = eig.eigenvalues();
  if (!(lam.minCoeff() > kSingularCut * lam.maxCoeff()))
    throw std::domain_error("W must have full column rank");
  Eigen::MatrixXd inv_sqrt = eig.eigenvectors() *
                             lam.cwiseSqrt().cwiseInverse().asDiagonal() *
                             eig.eigenvectors().transpose();
  Eigen::MatrixXd Y = W * inv_sqrt;
  Eigen::MatrixXd KY = K.apply(Y);
  Eigen::MatrixXd T = KY - Y * (Y.transpose() * KY);
  return T.norm();
}

}  // namespace saflow::selfassign
