#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "saflow/selfassign.hpp"
#include "test_support.hpp"

using namespace saflow::selfassign;
using saflow::affinity::AffinityOperator;

namespace {

Eigen::MatrixXd hard_two_one() {
  Eigen::MatrixXd W(3, 2);
  W << 1, 0, 1, 0, 0, 1;
  return W;
}

Eigen::MatrixXd permutation_matrix(const std::vector<int>& perm) {
  const auto c = static_cast<Eigen::Index>(perm.size());
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(c, c);
  for (Eigen::Index j = 0; j < c; ++j) P(j, perm[static_cast<size_t>(j)]) = 1.0;
  return P;
}

}  // namespace

TEST_CASE("cluster mass sums columns and totals n") {
  CHECK(cluster_mass(hard_two_one()).isApprox(Eigen::Vector2d(2.0, 1.0)));
  Eigen::MatrixXd W(4, 2);
  W.setConstant(0.5);
  CHECK(cluster_mass(W).isApprox(Eigen::Vector2d(2.0, 2.0)));
  std::mt19937_64 rng(31);
  for (int round = 0; round < 10; ++round) {
    const Eigen::MatrixXd R = testsupport::random_interior_w(9, 4, rng);
    CHECK(cluster_mass(R).sum() == doctest::Approx(9.0).epsilon(1e-12));
  }
}

TEST_CASE("normalizer geodesic hits both endpoints") {
  std::mt19937_64 rng(32);
  const Eigen::MatrixXd W = testsupport::random_interior_w(10, 3, rng);
  const Eigen::MatrixXd C = cluster_mass(W).asDiagonal();
  const Eigen::MatrixXd G = W.transpose() * W;
  CHECK((geodesic_normalizer(W, 0.0).gamma() - C).lpNorm<Eigen::Infinity>() <
        1e-12);
  CHECK((geodesic_normalizer(W, 1.0).gamma() - G).lpNorm<Eigen::Infinity>() <=
        1e-10);
  CHECK_THROWS_AS(geodesic_normalizer(W, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(geodesic_normalizer(W, 1.1), std::invalid_argument);
}

TEST_CASE("interior normalizer is SPD with trace between the endpoints") {
  std::mt19937_64 rng(33);
  const Eigen::MatrixXd W = testsupport::random_interior_w(10, 3, rng);
  const auto norm = geodesic_normalizer(W, 0.5);
  const Eigen::MatrixXd gamma = norm.gamma();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gamma);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
  const double tr_c = cluster_mass(W).sum();
  const double tr_g = (W.transpose() * W).trace();
  const double lo = std::min(tr_c, tr_g) - 1e-8;
  const double hi = std::max(tr_c, tr_g) + 1e-8;
  CHECK(gamma.trace() >= lo);
  CHECK(gamma.trace() <= hi);
  // inverse really inverts
  CHECK((gamma * norm.gamma_inverse() - Eigen::MatrixXd::Identity(3, 3))
            .lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("self-affinity of a hard labeling averages within clusters") {
  const Eigen::MatrixXd A = self_assignment(hard_two_one(), 0.0);
  Eigen::MatrixXd expected(3, 3);
  expected << 0.5, 0.5, 0, 0.5, 0.5, 0, 0, 0, 1;
  CHECK((A - expected).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("self-affinity family satisfies the endpoint matrix properties") {
  std::mt19937_64 rng(34);
  for (int round = 0; round < 25; ++round) {
    const Eigen::Index n = 5 + static_cast<Eigen::Index>(rng() % 36);
    const Eigen::Index c = 2 + static_cast<Eigen::Index>(rng() % 5);
    const Eigen::MatrixXd W = testsupport::random_interior_w(n, c, rng);

    const Eigen::MatrixXd A0 = self_assignment(W, 0.0);
    CHECK((A0 - A0.transpose()).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(A0.minCoeff() >= 0.0);
    CHECK((A0 * Eigen::VectorXd::Ones(n) - Eigen::VectorXd::Ones(n))
              .lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((A0.transpose() * Eigen::VectorXd::Ones(n) - Eigen::VectorXd::Ones(n))
              .lpNorm<Eigen::Infinity>() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig0(A0);
    CHECK(eig0.eigenvalues().minCoeff() >= -1e-8);
    CHECK(eig0.eigenvalues().maxCoeff() <= 1.0 + 1e-8);

    // complete positivity witness
    const Eigen::VectorXd inv_sqrt =
        cluster_mass(W).array().sqrt().inverse().matrix();
    const Eigen::MatrixXd Y = W * inv_sqrt.asDiagonal();
    CHECK(Y.minCoeff() >= 0.0);
    CHECK((Y * Y.transpose() - A0).lpNorm<Eigen::Infinity>() <= 1e-10);

    const Eigen::MatrixXd A1 = self_assignment(W, 1.0);
    CHECK((A1 - A1.transpose()).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((A1 * A1 - A1).lpNorm<Eigen::Infinity>() <= 1e-8);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig1(A1);
    Eigen::Index ones = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
      const double lam = eig1.eigenvalues()[t];
      CHECK(std::min(std::abs(lam), std::abs(lam - 1.0)) <= 1e-6);
      if (std::abs(lam - 1.0) <= 1e-6) ++ones;
    }
    CHECK(ones == c);
    // the 1-eigenspace is spanned by the Stiefel representative of W
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram_eig(W.transpose() * W);
    const Eigen::MatrixXd Yc =
        W * gram_eig.operatorInverseSqrt();
    CHECK((A1 * Yc - Yc).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK((Yc.transpose() * Yc - Eigen::MatrixXd::Identity(c, c))
              .lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("apply form agrees with the materialized self-affinity") {
  std::mt19937_64 rng(35);
  const Eigen::MatrixXd W = testsupport::random_interior_w(15, 4, rng);
  const Eigen::MatrixXd X = testsupport::random_features(15, 3, rng);
  for (double s : {0.0, 0.35, 1.0})
    CHECK((self_assignment_apply(W, s, X) - self_assignment(W, s) * X)
              .lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("cluster confusion is row-stochastic, identity at labelings") {
  CHECK((cluster_confusion(hard_two_one()) - Eigen::MatrixXd::Identity(2, 2))
            .lpNorm<Eigen::Infinity>() < 1e-14);
  std::mt19937_64 rng(36);
  for (int round = 0; round < 20; ++round) {
    const Eigen::MatrixXd W = testsupport::random_interior_w(12, 4, rng);
    const Eigen::MatrixXd B = cluster_confusion(W);
    CHECK((B * Eigen::VectorXd::Ones(4) - Eigen::VectorXd::Ones(4))
              .lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK(std::abs(B.trace() - self_assignment(W, 0.0).trace()) <= 1e-10);
    CHECK(cluster_confusion_trace(W) == doctest::Approx(B.trace()));
    CHECK(B.trace() >= 0.0);
    CHECK(B.trace() <=
          Eigen::FullPivLU<Eigen::MatrixXd>(W).rank() + 1e-12);
  }
}

TEST_CASE("objective equals the dense trace form") {
  std::mt19937_64 rng(37);
  for (double s : {0.0, 0.25, 0.5, 1.0}) {
    const Eigen::MatrixXd W = testsupport::random_interior_w(14, 3, rng);
    const Eigen::MatrixXd K = testsupport::random_psd_kernel(14, rng);
    const double direct = (K * self_assignment(W, s)).trace();
    CHECK(objective(W, AffinityOperator::exact(K), s) ==
          doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("identity kernel at s = 0 gives the confusion trace") {
  std::mt19937_64 rng(38);
  const Eigen::MatrixXd W = testsupport::random_interior_w(11, 3, rng);
  const auto I = AffinityOperator::exact(Eigen::MatrixXd::Identity(11, 11));
  CHECK(objective(W, I, 0.0) ==
        doctest::Approx(cluster_confusion_trace(W)).epsilon(1e-12));
}

TEST_CASE("objective is invariant under relabeling") {
  std::mt19937_64 rng(39);
  const Eigen::MatrixXd W = testsupport::random_interior_w(10, 4, rng);
  const Eigen::MatrixXd K = testsupport::random_psd_kernel(10, rng);
  const auto op = AffinityOperator::exact(K);
  const Eigen::MatrixXd P = permutation_matrix({2, 0, 3, 1});
  for (double s : {0.0, 0.4, 1.0})
    CHECK(objective(W * P, op, s) ==
          doctest::Approx(objective(W, op, s)).epsilon(1e-12));
}

TEST_CASE("gradient matches central finite differences across the family") {
  std::mt19937_64 rng(40);
  for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    for (int round = 0; round < 3; ++round) {
      const Eigen::MatrixXd W = testsupport::random_interior_w(12, 3, rng);
      const Eigen::MatrixXd K = testsupport::random_psd_kernel(12, rng);
      const Eigen::MatrixXd grad =
          grad_objective(W, AffinityOperator::exact(K), s);
      const Eigen::MatrixXd fd = testsupport::fd_gradient(W, K, s);
      const double rel = (grad - fd).lpNorm<Eigen::Infinity>() /
                         std::max(1.0, fd.lpNorm<Eigen::Infinity>());
      CHECK(rel <= 1e-5);
    }
  }
}

TEST_CASE("gradient is equivariant under relabeling") {
  std::mt19937_64 rng(41);
  const Eigen::MatrixXd W = testsupport::random_interior_w(9, 4, rng);
  const Eigen::MatrixXd K = testsupport::random_psd_kernel(9, rng);
  const auto op = AffinityOperator::exact(K);
  const Eigen::MatrixXd P = permutation_matrix({3, 1, 0, 2});
  for (double s : {0.0, 0.5, 1.0}) {
    const Eigen::MatrixXd lhs = grad_objective(W * P, op, s);
    const Eigen::MatrixXd rhs = grad_objective(W, op, s) * P;
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("pseudo-inverse mode handles rank-deficient assignments") {
  Eigen::MatrixXd W(6, 3);
  // two identical columns after scaling: gram is singular
  W.col(0) = Eigen::VectorXd::Constant(6, 0.25);
  W.col(1) = Eigen::VectorXd::Constant(6, 0.25);
  W.col(2) = Eigen::VectorXd::Constant(6, 0.5);
  CHECK(gram_condition(W) > 1e15);
  CHECK_THROWS_AS(geodesic_normalizer(W, 0.5).gamma_inverse(),
                  std::domain_error);
  const Eigen::MatrixXd A = self_assignment(W, 0.5, true);
  CHECK((A - A.transpose()).lpNorm<Eigen::Infinity>() < 1e-10);
  // s = 0 never needs rank: the normalizer is diagonal
  CHECK_NOTHROW(self_assignment(W, 0.0));
}

TEST_CASE("materialization threshold guards the dense path") {
  Eigen::MatrixXd W(dense_materialization_threshold + 1, 2);
  W.setConstant(0.5);
  CHECK_THROWS_AS(self_assignment(W, 0.0), std::length_error);
  CHECK_NOTHROW(self_assignment_apply(W, 0.0, Eigen::MatrixXd::Ones(W.rows(), 1)));
}

TEST_CASE("stationarity residual vanishes on invariant subspaces") {
  std::mt19937_64 rng(42);
  const Eigen::Index n = 12, c = 3;
  const Eigen::MatrixXd W = testsupport::random_interior_w(n, c, rng);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram_eig(W.transpose() * W);
  const Eigen::MatrixXd Y = W * gram_eig.operatorInverseSqrt();
  // kernel whose dominant c-eigenspace is exactly range(W)
  Eigen::VectorXd lam(c);
  lam << 9.0, 7.0, 5.0;
  const Eigen::MatrixXd K =
      Y * lam.asDiagonal() * Y.transpose() +
      0.5 * (Eigen::MatrixXd::Identity(n, n) - Y * Y.transpose());
  const auto op = AffinityOperator::exact(K);
  CHECK(stiefel_stationarity_residual(W, op) <= 1e-8);
  CHECK(grad_objective(W, op, 1.0).lpNorm<Eigen::Infinity>() <= 1e-8);

  // a generic kernel separates the residual from zero
  const Eigen::MatrixXd K2 = testsupport::random_psd_kernel(n, rng);
  CHECK(stiefel_stationarity_residual(W, AffinityOperator::exact(K2)) > 1e-6);
}
