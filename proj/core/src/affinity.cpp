#include "saflow/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace saflow::affinity {

AffinityOperator AffinityOperator::exact(Eigen::MatrixXd K) {
  if (K.rows() != K.cols() || K.rows() < 1)
    throw std::invalid_argument("affinity matrix must be square");
  AffinityOperator op;
  op.sketched_ = false;
  op.n_ = K.rows();
  op.dense_ = std::move(K);
  return op;
}

AffinityOperator AffinityOperator::sketched(Eigen::MatrixXd cols,
                                            Eigen::MatrixXd pinv_block,
                                            std::vector<Eigen::Index> landmarks) {
  const Eigen::Index ell = cols.cols();
  if (pinv_block.rows() != ell || pinv_block.cols() != ell)
    throw std::invalid_argument("pinv block shape must match landmark count");
  if (static_cast<Eigen::Index>(landmarks.size()) != ell)
    throw std::invalid_argument("landmark list must match column count");
  AffinityOperator op;
  op.sketched_ = true;
  op.n_ = cols.rows();
  op.cols_ = std::move(cols);
  op.pinv_block_ = std::move(pinv_block);
  op.landmarks_ = std::move(landmarks);
  return op;
}

Eigen::Index AffinityOperator::landmark_count() const {
  return sketched_ ? cols_.cols() : n_;
}

Eigen::MatrixXd AffinityOperator::apply(const Eigen::MatrixXd& X) const {
  if (X.rows() != n_) throw std::invalid_argument("dimension mismatch");
  if (!sketched_) return dense_ * X;
  return cols_ * (pinv_block_ * (cols_.transpose() * X));
}

Eigen::MatrixXd AffinityOperator::materialize() const {
  if (!sketched_) return dense_;
  return cols_ * pinv_block_ * cols_.transpose();
}

const Eigen::MatrixXd& AffinityOperator::dense() const {
  if (sketched_)
    throw std::logic_error("dense() is only available on the exact form");
  return dense_;
}

AffinityOperator gaussian_kernel(const FeatureSet& features, double sigma) {
  if (features.metric != Metric::euclidean)
    throw std::invalid_argument("gaussian kernel needs euclidean features");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const Eigen::MatrixXd& F = features.F;
  const Eigen::Index n = F.rows();
  if (n < 1) throw std::invalid_argument("empty feature set");
  Eigen::VectorXd sq = F.rowwise().squaredNorm();
  Eigen::MatrixXd D = sq.replicate(1, n) + sq.transpose().replicate(n, 1)
                      - 2.0 * (F * F.transpose());
  D = D.cwiseMax(0.0);
  Eigen::MatrixXd K = (-D / (sigma * sigma)).array().exp();
  K = 0.5 * (K + K.transpose());
  K.diagonal().setOnes();
  return AffinityOperator::exact(std::move(K));
}

Eigen::VectorXd gaussian_kernel_column(const FeatureSet& features, double sigma,
                                       Eigen::Index k) {
  if (features.metric != Metric::euclidean)
    throw std::invalid_argument("gaussian kernel needs euclidean features");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const Eigen::MatrixXd& F = features.F;
  if (k < 0 || k >= F.rows()) throw std::invalid_argument("column out of range");
  Eigen::VectorXd d =
      (F.rowwise() - F.row(k)).rowwise().squaredNorm();
  Eigen::VectorXd col = (-d / (sigma * sigma)).array().exp();
  col[k] = 1.0;
  return col;
}

std::vector<Eigen::Index> sample_landmarks(Eigen::Index n, Eigen::Index ell,
                                           std::uint64_t seed) {
  if (ell < 1 || ell > n)
    throw std::invalid_argument("landmark count must lie in [1, n]");
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  for (Eigen::Index i = 0; i < ell; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(ell);
  std::sort(idx.begin(), idx.end());
  return idx;
}

AffinityOperator nystrom_sketch(
    Eigen::Index n, const std::function<Eigen::VectorXd(Eigen::Index)>& column,
    Eigen::Index ell, std::uint64_t seed, double tol_scale) {
  std::vector<Eigen::Index> idx = sample_landmarks(n, ell, seed);
  Eigen::MatrixXd C(n, ell);
  for (Eigen::Index j = 0; j < ell; ++j) {
    Eigen::VectorXd col = column(idx[j]);
    if (col.size() != n) throw std::invalid_argument("bad kernel column size");
    C.col(j) = col;
  }
  Eigen::MatrixXd A(ell, ell);
  for (Eigen::Index j = 0; j < ell; ++j)
    for (Eigen::Index i = 0; i < ell; ++i) A(i, j) = C(idx[i], j);
  A = 0.5 * (A + A.transpose());
  return AffinityOperator::sketched(std::move(C), symmetric_pinv(A, tol_scale),
                                    std::move(idx));
}

AffinityOperator nystrom_sketch(const AffinityOperator& dense_op,
                                Eigen::Index ell, std::uint64_t seed,
                                double tol_scale) {
  const Eigen::MatrixXd& K = dense_op.dense();
  return nystrom_sketch(
      dense_op.size(),
      [&K](Eigen::Index k) -> Eigen::VectorXd { return K.col(k); }, ell, seed,
      tol_scale);
}

Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& S, double tol_scale) {
  if (S.rows() != S.cols())
    throw std::invalid_argument("pinv needs a square matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  Eigen::VectorXd lam = eig.eigenvalues();
  const double lmax = lam.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(lam.size());
  if (lmax > 0.0) {
    const double cut = tol_scale * lmax;
    for (Eigen::Index i = 0; i < lam.size(); ++i)
      if (std::abs(lam[i]) > cut) inv[i] = 1.0 / lam[i];
  }
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& K, double* max_asym) {
  if (K.rows() != K.cols())
    throw std::invalid_argument("symmetrize needs a square matrix");
  if (max_asym) *max_asym = (K - K.transpose()).cwiseAbs().maxCoeff();
  return 0.5 * (K + K.transpose());
}

Eigen::MatrixXd dominant_eigenvectors(const Eigen::MatrixXd& S, int c,
                                      std::uint64_t seed, int max_iters,
                                      double tol) {
  if (S.rows() != S.cols()) throw std::invalid_argument("matrix must be square");
  const Eigen::Index n = S.rows();
  if (c < 1 || c > n) throw std::invalid_argument("eigenvector count out of range");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd V(n, c);
  for (int k = 0; k < c; ++k) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
    // Deflate against converged directions, then iterate.
    for (int it = 0; it < max_iters; ++it) {
      for (int j = 0; j < k; ++j) v -= V.col(j).dot(v) * V.col(j);
      double norm = v.norm();
      if (!(norm > 0.0)) { v.setZero(); v[k % n] = 1.0; norm = 1.0; }
      v /= norm;
      Eigen::VectorXd w = S * v;
      for (int j = 0; j < k; ++j) w -= V.col(j).dot(w) * V.col(j);
      const double lam = v.dot(w);
      if ((w - lam * v).norm() <= tol * std::max(1.0, std::abs(lam))) {
        v = w.norm() > 0.0 ? Eigen::VectorXd(w / w.norm()) : v;
        break;
      }
      v = w.norm() > 0.0 ? Eigen::VectorXd(w / w.norm()) : v;
    }
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0.0) v = -v;
    V.col(k) = v;
  }
  return V;
}

}  // namespace saflow::affinity
