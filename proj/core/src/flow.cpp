#include "saflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "saflow/manifold.hpp"
#include "saflow/selfassign.hpp"

namespace saflow::flow {

bool NeighborhoodSystem::valid(double tol) const {
  if (neighbors.size() != weights.size()) return false;
  const Eigen::Index n = size();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (neighbors[i].size() != weights[i].size()) return false;
    if (neighbors[i].empty()) return false;
    bool has_self = false;
    double sum = 0.0;
    for (size_t t = 0; t < neighbors[i].size(); ++t) {
      const Eigen::Index k = neighbors[i][t];
      if (k < 0 || k >= n) return false;
      if (k == i) has_self = true;
      if (!(weights[i][t] > 0.0)) return false;
      sum += weights[i][t];
    }
    if (!has_self) return false;
    if (std::abs(sum - 1.0) > tol * neighbors[i].size()) return false;
  }
  return true;
}

namespace {

void check_window(int rows, int cols, int window_side) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("empty grid");
  if (window_side < 1 || window_side % 2 == 0)
    throw std::invalid_argument("window side must be odd and positive");
}

}  // namespace

NeighborhoodSystem grid_uniform(int rows, int cols, int window_side) {
  check_window(rows, cols, window_side);
  const int r = (window_side - 1) / 2;
  NeighborhoodSystem nb;
  nb.neighbors.resize(static_cast<size_t>(rows) * cols);
  nb.weights.resize(nb.neighbors.size());
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      const Eigen::Index i = static_cast<Eigen::Index>(y) * cols + x;
      auto& lst = nb.neighbors[i];
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= rows) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= cols) continue;
          lst.push_back(static_cast<Eigen::Index>(yy) * cols + xx);
        }
      }
      nb.weights[i].assign(lst.size(), 1.0 / static_cast<double>(lst.size()));
    }
  }
  return nb;
}

NeighborhoodSystem grid_nonlocal_means(const Eigen::MatrixXd& F, int rows,
                                       int cols, int window_side,
                                       int patch_radius, double rho_w) {
  check_window(rows, cols, window_side);
  if (F.rows() != static_cast<Eigen::Index>(rows) * cols)
    throw std::invalid_argument("feature rows must match grid size");
  if (patch_radius < 0) throw std::invalid_argument("negative patch radius");
  if (!(rho_w > 0.0)) throw std::invalid_argument("rho_w must be positive");
  const int r = (window_side - 1) / 2;

  // Squared patch difference over offsets in range for both centers.
  auto patch_sq = [&](int ya, int xa, int yb, int xb) {
    double acc = 0.0;
    for (int dy = -patch_radius; dy <= patch_radius; ++dy) {
      const int ya2 = ya + dy, yb2 = yb + dy;
      if (ya2 < 0 || ya2 >= rows || yb2 < 0 || yb2 >= rows) continue;
      for (int dx = -patch_radius; dx <= patch_radius; ++dx) {
        const int xa2 = xa + dx, xb2 = xb + dx;
        if (xa2 < 0 || xa2 >= cols || xb2 < 0 || xb2 >= cols) continue;
        acc += (F.row(static_cast<Eigen::Index>(ya2) * cols + xa2) -
                F.row(static_cast<Eigen::Index>(yb2) * cols + xb2))
                   .squaredNorm();
      }
    }
    return acc;
  };

  NeighborhoodSystem nb;
  nb.neighbors.resize(F.rows());
  nb.weights.resize(F.rows());
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      const Eigen::Index i = static_cast<Eigen::Index>(y) * cols + x;
      auto& lst = nb.neighbors[i];
      auto& wts = nb.weights[i];
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= rows) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= cols) continue;
          lst.push_back(static_cast<Eigen::Index>(yy) * cols + xx);
          wts.push_back(std::exp(-patch_sq(y, x, yy, xx) / rho_w));
        }
      }
      const double sum = std::accumulate(wts.begin(), wts.end(), 0.0);
      for (double& w : wts) w /= sum;
    }
  }
  return nb;
}

NeighborhoodSystem graph_weights(const Eigen::MatrixXd& K_E) {
  if (K_E.rows() != K_E.cols())
    throw std::invalid_argument("affinity matrix must be square");
  if ((K_E.array() < 0.0).any())
    throw std::invalid_argument("graph weights need nonnegative affinities");
  const Eigen::Index n = K_E.rows();
  NeighborhoodSystem nb;
  nb.neighbors.resize(n);
  nb.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double degree = K_E.row(i).sum();
    auto& lst = nb.neighbors[i];
    auto& wts = nb.weights[i];
    lst.push_back(i);
    wts.push_back(K_E(i, i) + degree);
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == i || !(K_E(i, k) > 0.0)) continue;
      lst.push_back(k);
      wts.push_back(K_E(i, k));
    }
    const double sum = std::accumulate(wts.begin(), wts.end(), 0.0);
    if (!(sum > 0.0))
      throw std::invalid_argument("isolated vertex with zero degree");
    for (double& w : wts) w /= sum;
  }
  return nb;
}

NeighborhoodSystem singleton(Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("empty vertex set");
  NeighborhoodSystem nb;
  nb.neighbors.assign(n, {});
  nb.weights.assign(n, {});
  for (Eigen::Index i = 0; i < n; ++i) {
    nb.neighbors[i] = {i};
    nb.weights[i] = {1.0};
  }
  return nb;
}

Eigen::MatrixXd likelihood(const Eigen::MatrixXd& W, const Eigen::MatrixXd& D,
                           double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if ((D.array() < 0.0).any())
    throw std::invalid_argument("distances must be nonnegative");
  return manifold::lift_rows(W, (-1.0 / rho) * D);
}

Eigen::MatrixXd generalized_likelihood(const Eigen::MatrixXd& W,
                                       const Eigen::MatrixXd& grad,
                                       double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  return manifold::lift_rows(W, (1.0 / rho) * grad);
}

Eigen::MatrixXd similarity(const Eigen::MatrixXd& W, const Eigen::MatrixXd& L,
                           const NeighborhoodSystem& nbhd) {
  if (W.rows() != L.rows() || W.cols() != L.cols())
    throw std::invalid_argument("dimension mismatch");
  if (nbhd.size() != W.rows())
    throw std::invalid_argument("neighborhood system size mismatch");
  // With sum_k w_ik = 1 the averaged inverse maps collapse to
  //   S_i = lift(W_i, sum_k w_ik log L_k - log W_i).
  const Eigen::MatrixXd logL =
      L.cwiseMax(std::numeric_limits<double>::min()).array().log();
  Eigen::MatrixXd X(W.rows(), W.cols());
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    Eigen::RowVectorXd avg = Eigen::RowVectorXd::Zero(W.cols());
    const auto& lst = nbhd.neighbors[i];
    const auto& wts = nbhd.weights[i];
    for (size_t t = 0; t < lst.size(); ++t) avg += wts[t] * logL.row(lst[t]);
    X.row(i) = avg - W.row(i).array().log().matrix();
  }
  return manifold::lift_rows(W, X);
}

void euler_step(Eigen::MatrixXd& W, const Eigen::MatrixXd& S, double h,
                double floor_value) {
  if (!(h >= 0.0))
    throw std::invalid_argument("step size must be nonnegative");
  // Exp_p(h R_p S) = lift(p, h S) since lift = Exp o R and R is linear.
  W = manifold::lift_rows(W, h * S);
  manifold::renormalize_rows(W, floor_value);
}

double average_entropy(const Eigen::MatrixXd& W) {
  if (W.rows() < 1) throw std::invalid_argument("empty assignment matrix");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < W.rows(); ++i)
    acc += manifold::entropy(W.row(i).transpose());
  return acc / static_cast<double>(W.rows());
}

LabelField round_to_labels(const Eigen::MatrixXd& W) {
  const Eigen::Index n = W.rows(), c = W.cols();
  if (n < 1 || c < 1) throw std::invalid_argument("empty assignment matrix");
  LabelField out;
  out.labels.resize(n);
  std::vector<int> col_of(n);
  std::vector<char> used(c, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < c; ++j)
      if (W(i, j) > W(i, best)) best = j;  // strict keeps smallest on ties
    col_of[i] = static_cast<int>(best);
    used[best] = 1;
  }
  std::vector<int> remap(c, -1);
  for (Eigen::Index j = 0; j < c; ++j) {
    if (!used[j]) continue;
    remap[j] = out.c_effective++;
    out.column_of_label.push_back(static_cast<int>(j));
  }
  for (Eigen::Index i = 0; i < n; ++i) out.labels[i] = remap[col_of[i]];
  return out;
}

Eigen::MatrixXd hard_assignment(const LabelField& field) {
  const Eigen::Index n = static_cast<Eigen::Index>(field.labels.size());
  if (n < 1 || field.c_effective < 1)
    throw std::invalid_argument("empty label field");
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, field.c_effective);
  for (Eigen::Index i = 0; i < n; ++i) W(i, field.labels[i]) = 1.0;
  return W;
}

double label_agreement(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("label vectors must match and be nonempty");
  const int ca = 1 + *std::max_element(a.begin(), a.end());
  const int cb = 1 + *std::max_element(b.begin(), b.end());
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(ca, cb);
  for (size_t i = 0; i < a.size(); ++i) table(a[i], b[i]) += 1.0;

  const bool a_small = ca <= cb;
  Eigen::MatrixXd T = a_small ? table : Eigen::MatrixXd(table.transpose());
  const int small = static_cast<int>(T.rows());
  const int large = static_cast<int>(T.cols());

  double best = 0.0;
  if (small <= 10) {
    // Exact: maximize over injections of the small side into the large one.
    std::vector<int> perm(large);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> pick(small);
    std::function<void(int, double, unsigned long long)> rec =
        [&](int row, double acc, unsigned long long mask) {
          if (row == small) { best = std::max(best, acc); return; }
          for (int j = 0; j < large; ++j) {
            if (mask & (1ull << j)) continue;
            rec(row + 1, acc + T(row, j), mask | (1ull << j));
          }
        };
    rec(0, 0.0, 0ull);
  } else {
    // Greedy fallback for many labels.
    std::vector<char> used(large, 0);
    for (int r = 0; r < small; ++r) {
      int arg = -1;
      double val = -1.0;
      for (int j = 0; j < large; ++j)
        if (!used[j] && T(r, j) > val) { val = T(r, j); arg = j; }
      if (arg >= 0) { used[arg] = 1; best += val; }
    }
  }
  return best / static_cast<double>(a.size());
}

FlowResult run_saf(const affinity::AffinityOperator& K,
                   const Eigen::MatrixXd& D0, const NeighborhoodSystem& nbhd,
                   const FlowConfig& cfg, const StepObserver& observer) {
  const Eigen::Index n = K.size();
  const Eigen::Index c = D0.cols();
  if (D0.rows() != n) throw std::invalid_argument("seed distance rows != n");
  if (c < 2) throw std::invalid_argument("need at least 2 labels");
  if (nbhd.size() != n)
    throw std::invalid_argument("neighborhood system size mismatch");
  if (cfg.s < 0.0 || cfg.s > 1.0)
    throw std::invalid_argument("objective parameter must lie in [0, 1]");
  if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(cfg.step > 0.0))
    throw std::invalid_argument("step size must be positive");

  FlowResult res;
  Eigen::MatrixXd barycenters =
      Eigen::MatrixXd::Constant(n, c, 1.0 / static_cast<double>(c));
  res.W = manifold::lift_rows(barycenters, -cfg.init_scale * D0);
  manifold::renormalize_rows(res.W, cfg.renorm_floor);

  bool pinv = false;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    if (cfg.s > 0.0 && !pinv &&
        selfassign::gram_condition(res.W) > cfg.pinv_condition)
      pinv = true;  // stays engaged for the rest of the run
    Eigen::MatrixXd grad = selfassign::grad_objective(res.W, K, cfg.s, pinv);
    Eigen::MatrixXd L = generalized_likelihood(res.W, grad, cfg.rho);
    Eigen::MatrixXd S = similarity(res.W, L, nbhd);
    euler_step(res.W, S, cfg.step, cfg.renorm_floor);

    const double ent = average_entropy(res.W);
    Eigen::VectorXd mass = selfassign::cluster_mass(res.W);
    res.trace.entropy.push_back(ent);
    res.trace.confusion_trace.push_back(
        selfassign::cluster_confusion_trace(res.W));
    res.trace.min_mass.push_back(mass.minCoeff());
    res.trace.max_mass.push_back(mass.maxCoeff());
    res.iterations = iter;
    if (observer) observer(iter, res.W);
    if (ent < cfg.entropy_tol) { res.converged = true; break; }
  }

  res.pinv_engaged = pinv;
  res.final_entropy = res.trace.entropy.empty() ? average_entropy(res.W)
                                                : res.trace.entropy.back();
  res.labels = round_to_labels(res.W);
  res.objective_value = selfassign::objective(res.W, K, cfg.s, pinv);
  return res;
}

}  // namespace saflow::flow
