#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

// Affinity construction: exact Gaussian kernels, low-rank column sketches in
// factored form, and the small spectral utilities built on top of them.
namespace saflow::affinity {

enum class Metric { euclidean, precomputed, patch };

// One feature vector per row.
struct FeatureSet {
  Eigen::MatrixXd F;
  Metric metric = Metric::euclidean;
};

// Symmetric affinity operator.  Either a dense matrix, or the column sketch
// K ~= C pinv(A) C^T held as C (n x l) and pinv(A) (l x l) so products never
// materialize an n x n matrix.
class AffinityOperator {
 public:
  static AffinityOperator exact(Eigen::MatrixXd K);
  static AffinityOperator sketched(Eigen::MatrixXd cols,
                                   Eigen::MatrixXd pinv_block,
                                   std::vector<Eigen::Index> landmarks);

  Eigen::Index size() const { return n_; }
  bool sketched_form() const { return sketched_; }
  Eigen::Index landmark_count() const;
  const std::vector<Eigen::Index>& landmarks() const { return landmarks_; }

  // K * X.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;

  // Dense matrix; materializes the sketch.  Intended for small n.
  Eigen::MatrixXd materialize() const;

  // Stored dense matrix; exact form only.
  const Eigen::MatrixXd& dense() const;

 private:
  AffinityOperator() = default;
  bool sketched_ = false;
  Eigen::Index n_ = 0;
  Eigen::MatrixXd dense_;               // exact form
  Eigen::MatrixXd cols_, pinv_block_;   // sketched form
  std::vector<Eigen::Index> landmarks_;
};

// K_ik = exp(-||f_i - f_k||^2 / sigma^2).  Unit diagonal; symmetric;
// positive semidefinite for Euclidean features.  Requires metric ==
// euclidean and sigma > 0.
AffinityOperator gaussian_kernel(const FeatureSet& features, double sigma);

// Single kernel column, same formula; avoids the n x n matrix.
Eigen::VectorXd gaussian_kernel_column(const FeatureSet& features, double sigma,
                                       Eigen::Index k);

// l of n indices drawn uniformly without replacement via a partial
// Fisher-Yates shuffle on std::mt19937_64(seed); returned ascending.
std::vector<Eigen::Index> sample_landmarks(Eigen::Index n, Eigen::Index ell,
                                           std::uint64_t seed);

// Column sketch: samples l landmark columns, inverts the landmark block by
// symmetric eigendecomposition, drops eigenvalues <= tol_scale * |lambda|max.
// column(k) must return the full k-th kernel column.
AffinityOperator nystrom_sketch(
    Eigen::Index n, const std::function<Eigen::VectorXd(Eigen::Index)>& column,
    Eigen::Index ell, std::uint64_t seed, double tol_scale = 1e-10);

AffinityOperator nystrom_sketch(const AffinityOperator& dense_op,
                                Eigen::Index ell, std::uint64_t seed,
                                double tol_scale = 1e-10);

// Moore-Penrose pseudo-inverse of a symmetric matrix; eigenvalues with
// |lambda| <= tol_scale * |lambda|max are treated as zero.
Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& S,
                               double tol_scale = 1e-10);

// (K + K^T)/2.  If max_asym is non-null it receives max|K - K^T|.
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& K,
                           double* max_asym = nullptr);

// The c eigenvectors of a symmetric matrix with largest |eigenvalue|, one per
// column, found by power iteration with deflation from a seeded start.  Each
// vector is unit length with its largest-magnitude entry positive.
Eigen::MatrixXd dominant_eigenvectors(const Eigen::MatrixXd& S, int c,
                                      std::uint64_t seed, int max_iters = 2000,
                                      double tol = 1e-12);

}  // namespace saflow::affinity
