#pragma once

#include <Eigen/Dense>

// Geometry of the open probability simplex and of row-stochastic assignment
// matrices: tangent projection, the replicator map, and the e-geometry
// exponential maps the assignment flow is built from.
//
// A point p is interior iff every entry is > 0 and the entries sum to 1.
// The tangent space T_0 consists of zero-sum vectors.
namespace saflow::manifold {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Uniform point (1/c, ..., 1/c).  c >= 2.
VectorXd barycenter(Eigen::Index c);

// Orthogonal projection onto T_0: x - mean(x) * 1.
VectorXd project_tangent(const VectorXd& x);

// Replicator map R_p x = p .* x - <p, x> p; maps any x into T_0.
VectorXd replicator(const VectorXd& p, const VectorXd& x);

// Exp_p(v) = p .* exp(v ./ p) / <p, exp(v ./ p)> for v in T_0.
// Evaluated with a shifted exponent, so large v cannot overflow.
VectorXd exp_map(const VectorXd& p, const VectorXd& v);

// Exp_p^{-1}(q) = R_p log(q ./ p).  Both points interior.
VectorXd exp_map_inverse(const VectorXd& p, const VectorXd& q);

// Lifting map exp_p(x) = Exp_p(R_p x) = p .* e^x / <p, e^x>, defined for
// arbitrary x; constant shifts of x are absorbed.  Shift-stable.
VectorXd lift(const VectorXd& p, const VectorXd& x);

// exp_p^{-1}(q) = Pi_0 log(q ./ p).
VectorXd lift_inverse(const VectorXd& p, const VectorXd& q);

// Row i of the result is lift(W.row(i), X.row(i)).
MatrixXd lift_rows(const MatrixXd& W, const MatrixXd& X);

// Clamp entries to at least floor_value, rescale rows to sum 1, then clamp
// once more.  The final clamp keeps every entry >= floor_value exactly while
// perturbing row sums by at most cols * floor_value^2.
// Requires 0 < floor_value < 1/cols.
void renormalize_rows(MatrixXd& W, double floor_value);

// -sum_j p_j log p_j with the 0 log 0 = 0 convention.
double entropy(const VectorXd& p);

bool is_interior_point(const VectorXd& p, double tol = 1e-12);
bool is_tangent(const VectorXd& v, double tol = 1e-12);

// Every entry >= floor_value, every row sum within tol of 1, c >= 2.
bool is_assignment_matrix(const MatrixXd& W, double floor_value,
                          double tol = 1e-12);

}  // namespace saflow::manifold
