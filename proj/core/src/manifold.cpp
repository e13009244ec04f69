#include "saflow/manifold.hpp"

#include <cmath>
#include <stdexcept>

namespace saflow::manifold {

namespace {

void check_point(const VectorXd& p) {
  if (p.size() < 2)
    throw std::invalid_argument("simplex point needs at least 2 entries");
  if (!(p.array() > 0.0).all())
    throw std::domain_error("simplex point must be strictly positive");
}

void check_same_size(const VectorXd& a, const VectorXd& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("dimension mismatch");
}

}  // namespace

VectorXd barycenter(Eigen::Index c) {
  if (c < 2) throw std::invalid_argument("simplex needs at least 2 labels");
  return VectorXd::Constant(c, 1.0 / static_cast<double>(c));
}

VectorXd project_tangent(const VectorXd& x) {
  if (x.size() < 2)
    throw std::invalid_argument("tangent vector needs at least 2 entries");
  return x.array() - x.mean();
}

VectorXd replicator(const VectorXd& p, const VectorXd& x) {
  check_point(p);
  check_same_size(p, x);
  return p.cwiseProduct(x) - p.dot(x) * p;
}

VectorXd exp_map(const VectorXd& p, const VectorXd& v) {
  check_point(p);
  check_same_size(p, v);
  Eigen::ArrayXd u = v.array() / p.array();
  u -= u.maxCoeff();
  VectorXd w = p.array() * u.exp();
  return w / w.sum();
}

VectorXd exp_map_inverse(const VectorXd& p, const VectorXd& q) {
  check_point(p);
  check_point(q);
  check_same_size(p, q);
  VectorXd r = (q.array() / p.array()).log();
  return replicator(p, r);
}

VectorXd lift(const VectorXd& p, const VectorXd& x) {
  check_point(p);
  check_same_size(p, x);
  Eigen::ArrayXd z = x.array() - x.maxCoeff();
  VectorXd w = p.array() * z.exp();
  return w / w.sum();
}

VectorXd lift_inverse(const VectorXd& p, const VectorXd& q) {
  check_point(p);
  check_point(q);
  check_same_size(p, q);
  return project_tangent((q.array() / p.array()).log());
}

MatrixXd lift_rows(const MatrixXd& W, const MatrixXd& X) {
  if (W.rows() != X.rows() || W.cols() != X.cols())
    throw std::invalid_argument("dimension mismatch");
  MatrixXd out(W.rows(), W.cols());
  for (Eigen::Index i = 0; i < W.rows(); ++i)
    out.row(i) = lift(W.row(i).transpose(), X.row(i).transpose()).transpose();
  return out;
}

void renormalize_rows(MatrixXd& W, double floor_value) {
  if (W.cols() < 2) throw std::invalid_argument("needs at least 2 columns");
  if (!(floor_value > 0.0) || floor_value >= 1.0 / static_cast<double>(W.cols()))
    throw std::invalid_argument("floor must lie in (0, 1/cols)");
  W = W.cwiseMax(floor_value);
  VectorXd sums = W.rowwise().sum();
  W.array().colwise() /= sums.array();
  W = W.cwiseMax(floor_value);
}

double entropy(const VectorXd& p) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j)
    if (p[j] > 0.0) h -= p[j] * std::log(p[j]);
  return h;
}

bool is_interior_point(const VectorXd& p, double tol) {
  if (p.size() < 2) return false;
  if (!(p.array() > 0.0).all()) return false;
  return std::abs(p.sum() - 1.0) <= tol;
}

bool is_tangent(const VectorXd& v, double tol) {
  if (v.size() < 2) return false;
  return std::abs(v.sum()) <= tol * (1.0 + v.cwiseAbs().maxCoeff());
}

bool is_assignment_matrix(const MatrixXd& W, double floor_value, double tol) {
  if (W.cols() < 2 || W.rows() < 1) return false;
  if ((W.array() < floor_value).any()) return false;
  return ((W.rowwise().sum().array() - 1.0).abs() <= tol).all();
}

}  // namespace saflow::manifold
