#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "saflow/affinity.hpp"

// The coupled replicator dynamics: likelihood and similarity maps, the
// geometric Euler step, the unsupervised run loop, and label rounding.
namespace saflow::flow {

// Per-vertex neighborhoods with positive weights summing to 1.  Every list
// contains the vertex itself.
struct NeighborhoodSystem {
  std::vector<std::vector<Eigen::Index>> neighbors;
  std::vector<std::vector<double>> weights;

  Eigen::Index size() const {
    return static_cast<Eigen::Index>(neighbors.size());
  }
  bool valid(double tol = 1e-12) const;
};

// Chebyshev window of odd side window_side on a rows x cols grid (row-major
// vertex order), cropped at the boundary, uniform weights 1/|N_i|.
NeighborhoodSystem grid_uniform(int rows, int cols, int window_side);

// Same window, weights proportional to exp(-||P_i - P_k||_F^2 / rho_w) where
// P_i is the feature patch of radius patch_radius around i; at the boundary
// the patch difference runs over offsets valid for both centers.  F holds one
// feature row per vertex in row-major grid order.
NeighborhoodSystem grid_nonlocal_means(const Eigen::MatrixXd& F, int rows,
                                       int cols, int window_side,
                                       int patch_radius, double rho_w);

// Graph weights from a symmetric nonnegative affinity: N_i = {i} plus the
// positive off-diagonal entries of row i; the self weight is the row sum
// (degree) added on the diagonal before normalization.
NeighborhoodSystem graph_weights(const Eigen::MatrixXd& K_E);

// One isolated vertex per list (no spatial regularization).
NeighborhoodSystem singleton(Eigen::Index n);

struct FlowConfig {
  double s = 0.0;               // objective family parameter, [0, 1]
  double step = 0.1;            // Euler step h
  double rho = 0.1;             // likelihood scale
  double entropy_tol = 1e-3;    // mean-entropy termination threshold
  int max_iters = 5000;
  double renorm_floor = 1e-10;
  double init_scale = 1e-2;     // multiplies seed distances at start
  double pinv_condition = 1e12; // gram condition that engages pseudo-inverses
};

// Supervised likelihood rows L_i = lift(W_i, -D_i / rho), D >= 0.
Eigen::MatrixXd likelihood(const Eigen::MatrixXd& W, const Eigen::MatrixXd& D,
                           double rho);

// Ascent likelihood rows lift(W_i, +grad_i / rho).
Eigen::MatrixXd generalized_likelihood(const Eigen::MatrixXd& W,
                                       const Eigen::MatrixXd& grad,
                                       double rho);

// S_i = Exp_{W_i}( sum_k w_ik Exp_{W_i}^{-1}(L_k) ).  Underflowed likelihood
// entries are clamped at the smallest normal double before the log.
Eigen::MatrixXd similarity(const Eigen::MatrixXd& W, const Eigen::MatrixXd& L,
                           const NeighborhoodSystem& nbhd);

// W_i <- Exp_{W_i}(h R_{W_i} S_i), then floor + row renormalization.
void euler_step(Eigen::MatrixXd& W, const Eigen::MatrixXd& S, double h,
                double floor_value);

// Mean row entropy (1/n) sum_i H(W_i).
double average_entropy(const Eigen::MatrixXd& W);

// Hard labels by row argmax (ties to the smallest column), with empty
// columns removed; label j maps back to original column column_of_label[j],
// surviving columns keep their relative order.
struct LabelField {
  std::vector<int> labels;
  std::vector<int> column_of_label;
  int c_effective = 0;
};

LabelField round_to_labels(const Eigen::MatrixXd& W);

// n x c_effective hard assignment matrix of a label field.
Eigen::MatrixXd hard_assignment(const LabelField& field);

// Fraction of positions where the two labelings agree under the best
// label bijection (exact over injections of the smaller label set when it
// has at most 10 labels, greedy above that).
double label_agreement(const std::vector<int>& a, const std::vector<int>& b);

struct FlowTrace {
  std::vector<double> entropy;
  std::vector<double> confusion_trace;  // tr B(W) per iteration
  std::vector<double> min_mass, max_mass;
};

struct FlowResult {
  Eigen::MatrixXd W;
  LabelField labels;
  FlowTrace trace;
  int iterations = 0;
  bool converged = false;
  bool pinv_engaged = false;
  double final_entropy = 0.0;
  double objective_value = 0.0;
};

using StepObserver = std::function<void(int iter, const Eigen::MatrixXd& W)>;

// Unsupervised run: W(0) = lift(barycenter, -init_scale * D0), then repeated
// generalized_likelihood -> similarity -> euler_step until the mean entropy
// drops below entropy_tol or max_iters is reached.  D0 holds nonnegative
// seed distances, one column per label.  Once the gram condition number
// exceeds pinv_condition (s > 0 only), pseudo-inverses stay engaged for the
// rest of the run.
FlowResult run_saf(const affinity::AffinityOperator& K,
                   const Eigen::MatrixXd& D0, const NeighborhoodSystem& nbhd,
                   const FlowConfig& cfg, const StepObserver& observer = {});

}  // namespace saflow::flow
