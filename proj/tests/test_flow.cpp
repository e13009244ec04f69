#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "saflow/flow.hpp"
#include "saflow/manifold.hpp"
#include "saflow/prototypes.hpp"
#include "saflow/seeding.hpp"
#include "test_support.hpp"

using namespace saflow::flow;
using saflow::affinity::AffinityOperator;
using saflow::affinity::FeatureSet;
using saflow::affinity::Metric;

namespace {

// Two well-separated planar blobs, 16 points each, in grid scan order
// interleaved so neighborhood structure does not give the split away.
Eigen::MatrixXd two_blob_features(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> jitter(0.0, 0.15);
  Eigen::MatrixXd F(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double cx = i < n / 2 ? 0.0 : 4.0;
    F(i, 0) = cx + jitter(rng);
    F(i, 1) = jitter(rng);
  }
  return F;
}

NeighborhoodSystem path_uniform(Eigen::Index n) {
  NeighborhoodSystem nbhd;
  nbhd.neighbors.resize(static_cast<size_t>(n));
  nbhd.weights.resize(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& nb = nbhd.neighbors[static_cast<size_t>(i)];
    nb.push_back(i);
    if (i > 0) nb.push_back(i - 1);
    if (i + 1 < n) nb.push_back(i + 1);
    nbhd.weights[static_cast<size_t>(i)].assign(nb.size(),
                                                1.0 / static_cast<double>(nb.size()));
  }
  return nbhd;
}

FlowResult run_two_blob(Eigen::Index n, std::uint64_t seed,
                        std::mt19937_64& rng) {
  const Eigen::MatrixXd F = two_blob_features(n, rng);
  const FeatureSet fs{F, Metric::euclidean};
  const auto K = saflow::affinity::gaussian_kernel(fs, 1.0);
  const auto seeds = saflow::seeding::greedy_k_center(fs, 2, seed);
  const Eigen::MatrixXd D0 = saflow::seeding::seed_distances(fs, seeds);
  FlowConfig cfg;
  return run_saf(K, D0, path_uniform(n), cfg);
}

}  // namespace

TEST_CASE("uniform grid windows crop at the boundary") {
  const NeighborhoodSystem nbhd = grid_uniform(4, 5, 3);
  REQUIRE(nbhd.size() == 20);
  CHECK(nbhd.valid());
  // interior vertex (1,1) -> full 3x3 window
  CHECK(nbhd.neighbors[6].size() == 9);
  CHECK(nbhd.weights[6][0] == doctest::Approx(1.0 / 9.0));
  // corner vertex -> 2x2 window
  CHECK(nbhd.neighbors[0].size() == 4);
  CHECK(nbhd.weights[0][0] == doctest::Approx(0.25));
  CHECK_THROWS_AS(grid_uniform(4, 5, 2), std::invalid_argument);
}

TEST_CASE("nonlocal means weights on a constant image are uniform") {
  const Eigen::MatrixXd F = Eigen::MatrixXd::Constant(20, 1, 0.7);
  const NeighborhoodSystem nbhd = grid_nonlocal_means(F, 4, 5, 3, 1, 0.1);
  CHECK(nbhd.valid());
  for (size_t i = 0; i < 20; ++i)
    for (double w : nbhd.weights[i])
      CHECK(w == doctest::Approx(1.0 / nbhd.neighbors[i].size()).epsilon(1e-12));
}

TEST_CASE("graph weights on the 3-path put the degree on the diagonal") {
  Eigen::MatrixXd K(3, 3);
  K << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  const NeighborhoodSystem nbhd = graph_weights(K);
  CHECK(nbhd.valid());
  // middle vertex: self weight (0 + degree 2), neighbors weight 1 -> (2,1,1)/4
  const auto& nb = nbhd.neighbors[1];
  const auto& w = nbhd.weights[1];
  REQUIRE(nb.size() == 3);
  CHECK(nb[0] == 1);
  CHECK(w[0] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(0.25));
  CHECK(w[2] == doctest::Approx(0.25));
  Eigen::MatrixXd isolated = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(graph_weights(isolated), std::invalid_argument);
}

TEST_CASE("likelihood lowers mass on distant labels") {
  Eigen::MatrixXd W(1, 2);
  W << 0.5, 0.5;
  Eigen::MatrixXd D(1, 2);

  D << 3.0, 3.0;  // constant distances change nothing
  CHECK((likelihood(W, D, 0.1) - W).lpNorm<Eigen::Infinity>() < 1e-14);

  D << 0.0, 0.1;  // hand value (1, e^{-1}) / (1 + e^{-1})
  const Eigen::MatrixXd L = likelihood(W, D, 0.1);
  CHECK(L(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));

  D << 0.0, 500.0;  // extreme distance drives mass to the near label
  CHECK(likelihood(W, D, 0.1)(0, 0) > 1.0 - 1e-12);

  D << 0.0, 0.1;  // vanishing drift as rho grows
  CHECK((likelihood(W, D, 1e9) - W).lpNorm<Eigen::Infinity>() < 1e-8);

  D << -0.1, 0.0;
  CHECK_THROWS_AS(likelihood(W, D, 0.1), std::invalid_argument);
}

TEST_CASE("ascent likelihood is shift invariant and fixed at zero gradient") {
  std::mt19937_64 rng(61);
  const Eigen::MatrixXd W = testsupport::random_interior_w(5, 3, rng);
  CHECK((generalized_likelihood(W, Eigen::MatrixXd::Zero(5, 3), 0.1) - W)
            .lpNorm<Eigen::Infinity>() < 1e-14);
  const Eigen::MatrixXd grad = testsupport::random_features(5, 3, rng);
  Eigen::MatrixXd shifted = grad;
  shifted.colwise() += Eigen::VectorXd::Constant(5, 2.7);
  CHECK((generalized_likelihood(W, shifted, 0.1) -
         generalized_likelihood(W, grad, 0.1))
            .lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("ascent likelihood at s = 0 equals the prototype-distance likelihood") {
  // with K = FF^T the gradient rows differ from the negated squared
  // prototype distances only by a per-row constant, which lifting absorbs
  std::mt19937_64 rng(62);
  const Eigen::MatrixXd F = testsupport::random_features(8, 2, rng);
  const Eigen::MatrixXd W = testsupport::random_interior_w(8, 3, rng);
  const auto K = AffinityOperator::exact((F * F.transpose()).eval());
  const Eigen::MatrixXd grad = saflow::selfassign::grad_objective(W, K, 0.0);
  const Eigen::MatrixXd protos = saflow::prototypes::recover_prototypes(W, F);
  Eigen::MatrixXd D(8, 3);
  for (Eigen::Index i = 0; i < 8; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      D(i, j) = (F.row(i) - protos.row(j)).squaredNorm();
  CHECK((generalized_likelihood(W, grad, 0.1) - likelihood(W, D, 0.1))
            .lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("similarity reduces to the likelihood in degenerate systems") {
  std::mt19937_64 rng(63);
  const Eigen::MatrixXd W = testsupport::random_interior_w(6, 3, rng);
  const Eigen::MatrixXd L = testsupport::random_interior_w(6, 3, rng);

  CHECK((similarity(W, L, singleton(6)) - L).lpNorm<Eigen::Infinity>() < 1e-12);

  // equal likelihood rows are a fixed point of the averaging
  Eigen::MatrixXd Leq(6, 3);
  Leq.rowwise() = L.row(2);
  const NeighborhoodSystem nbhd = grid_uniform(2, 3, 3);
  CHECK((similarity(W, Leq, nbhd).row(4) - L.row(2)).lpNorm<Eigen::Infinity>() <
        1e-12);

  // likelihood rows pinned at one state row leave that row in place
  Eigen::MatrixXd Lw(6, 3);
  Lw.rowwise() = W.row(4);
  CHECK((similarity(W, Lw, nbhd).row(4) - W.row(4)).lpNorm<Eigen::Infinity>() <
        1e-12);
}

TEST_CASE("euler step is the identity at h = 0 and preserves the manifold") {
  std::mt19937_64 rng(64);
  Eigen::MatrixXd W = testsupport::random_interior_w(10, 4, rng);
  const Eigen::MatrixXd W0 = W;
  const Eigen::MatrixXd S = testsupport::random_interior_w(10, 4, rng);
  euler_step(W, S, 0.0, 1e-10);
  CHECK((W - W0).lpNorm<Eigen::Infinity>() < 1e-12);
  for (int t = 0; t < 300; ++t) {
    euler_step(W, S, 0.1, 1e-10);
    REQUIRE(saflow::manifold::is_assignment_matrix(W, 1e-10, 1e-12));
  }
}

TEST_CASE("a fixed attractive similarity drives the state to a vertex") {
  // scalar recursion oracle for the c = 2 single-vertex system
  Eigen::MatrixXd W(1, 2), S(1, 2);
  W << 0.5, 0.5;
  S << 0.9, 0.1;
  const double h = 0.1;
  double w = 0.5;
  double prev_entropy = saflow::manifold::entropy(W.row(0));
  for (int t = 0; t < 200; ++t) {
    euler_step(W, S, h, 1e-10);
    const double a = w * std::exp(h * 0.9);
    const double b = (1.0 - w) * std::exp(h * 0.1);
    w = a / (a + b);
    CHECK(W(0, 0) == doctest::Approx(w).epsilon(1e-9));
    const double ent = saflow::manifold::entropy(W.row(0));
    CHECK(ent <= prev_entropy + 1e-12);
    prev_entropy = ent;
  }
  CHECK(W(0, 0) > 0.99);
}

TEST_CASE("entropy of uniform rows is log c and permutation invariant") {
  Eigen::MatrixXd W = Eigen::MatrixXd::Constant(5, 4, 0.25);
  CHECK(average_entropy(W) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  std::mt19937_64 rng(65);
  Eigen::MatrixXd R = testsupport::random_interior_w(6, 4, rng);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(4, 4);
  P(0, 2) = P(1, 0) = P(2, 3) = P(3, 1) = 1.0;
  CHECK(average_entropy(R * P) == doctest::Approx(average_entropy(R)).epsilon(1e-12));
}

TEST_CASE("rounding breaks ties to the first column and drops empty labels") {
  Eigen::MatrixXd W = Eigen::MatrixXd::Constant(3, 4, 0.25);
  const LabelField field = round_to_labels(W);
  CHECK(field.c_effective == 1);
  CHECK(field.labels == std::vector<int>({0, 0, 0}));
  CHECK(field.column_of_label == std::vector<int>({0}));

  Eigen::MatrixXd V(4, 5);
  V.setConstant(1e-6);
  V(0, 1) = V(1, 1) = 1.0 - 4e-6;  // column 1
  V(2, 3) = 1.0 - 4e-6;            // column 3
  V(3, 0) = 1.0 - 4e-6;            // column 0
  const LabelField f2 = round_to_labels(V);
  CHECK(f2.c_effective == 3);
  CHECK(f2.column_of_label == std::vector<int>({0, 1, 3}));
  CHECK(f2.labels == std::vector<int>({1, 1, 2, 0}));

  // re-rounding the induced hard matrix is the identity
  const Eigen::MatrixXd H = hard_assignment(f2);
  const LabelField f3 = round_to_labels(H);
  CHECK(f3.labels == f2.labels);
  CHECK(f3.c_effective == f2.c_effective);
}

TEST_CASE("label agreement maximizes over bijections") {
  CHECK(label_agreement({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(label_agreement({0, 0, 1, 1}, {2, 2, 5, 5}) == doctest::Approx(1.0));
  CHECK(label_agreement({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(0.5));
  CHECK(label_agreement({0, 1, 2, 2}, {1, 0, 2, 2}) == doctest::Approx(1.0));
}

TEST_CASE("the unsupervised flow separates two blobs along a path graph") {
  std::mt19937_64 rng(66);
  const FlowResult result = run_two_blob(32, 7, rng);
  CHECK(result.converged);
  CHECK(result.final_entropy < 1e-3);
  CHECK(result.labels.c_effective == 2);
  std::vector<int> truth(32);
  for (int i = 0; i < 32; ++i) truth[static_cast<size_t>(i)] = i < 16 ? 0 : 1;
  CHECK(label_agreement(result.labels.labels, truth) == doctest::Approx(1.0));

  // the confusion trace lands on the effective label count
  CHECK(std::abs(result.trace.confusion_trace.back() -
                 result.labels.c_effective) < 0.05);

  // the rounded output equalizes the affinity family endpoints
  const Eigen::MatrixXd H = hard_assignment(result.labels);
  const Eigen::MatrixXd A0 = saflow::selfassign::self_assignment(H, 0.0);
  const Eigen::MatrixXd A1 = saflow::selfassign::self_assignment(H, 1.0);
  CHECK((A0 - A1).lpNorm<Eigen::Infinity>() <= 1e-10);

  // terminal entropy does not rebound
  const auto& ent = result.trace.entropy;
  REQUIRE(ent.size() >= 10);
  CHECK(ent.back() <= ent[ent.size() * 9 / 10] + 1e-12);
}

TEST_CASE("flow labels match the exhaustive optimum on a small instance") {
  std::mt19937_64 rng(67);
  const Eigen::MatrixXd F = two_blob_features(10, rng);
  const FeatureSet fs{F, Metric::euclidean};
  const auto K = saflow::affinity::gaussian_kernel(fs, 1.0);
  const auto seeds = saflow::seeding::greedy_k_center(fs, 2, 5);
  const Eigen::MatrixXd D0 = saflow::seeding::seed_distances(fs, seeds);
  FlowConfig cfg;
  const FlowResult result = run_saf(K, D0, path_uniform(10), cfg);
  const std::vector<int> oracle = testsupport::best_two_partition(K.dense());
  CHECK(label_agreement(result.labels.labels, oracle) == doctest::Approx(1.0));
}

TEST_CASE("flow runs are deterministic") {
  std::mt19937_64 rng_a(68), rng_b(68);
  const FlowResult a = run_two_blob(24, 3, rng_a);
  const FlowResult b = run_two_blob(24, 3, rng_b);
  CHECK(a.labels.labels == b.labels.labels);
  CHECK(a.iterations == b.iterations);
  CHECK((a.W - b.W).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("supervised flow with singleton neighborhoods finds nearest prototypes") {
  // fixed prototypes, squared-distance data term, no spatial coupling:
  // the flow reduces to per-vertex replicator dynamics and commits each
  // vertex to its nearest prototype
  Eigen::MatrixXd F(6, 1), P(2, 1);
  F << 0.0, 0.2, 0.1, 1.9, 2.1, 2.0;
  P << 0.0, 2.0;
  Eigen::MatrixXd D(6, 2);
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 2; ++j)
      D(i, j) = (F.row(i) - P.row(j)).squaredNorm();
  Eigen::MatrixXd W = Eigen::MatrixXd::Constant(6, 2, 0.5);
  const NeighborhoodSystem nbhd = singleton(6);
  for (int t = 0; t < 400; ++t) {
    const Eigen::MatrixXd L = likelihood(W, D, 0.1);
    const Eigen::MatrixXd S = similarity(W, L, nbhd);
    euler_step(W, S, 0.1, 1e-10);
  }
  const LabelField field = round_to_labels(W);
  CHECK(field.labels == std::vector<int>({0, 0, 0, 1, 1, 1}));
  CHECK(average_entropy(W) < 1e-3);
}

TEST_CASE("neighborhood validity catches malformed systems") {
  NeighborhoodSystem bad;
  bad.neighbors = {{0, 1}, {1}};
  bad.weights = {{0.5, 0.5}, {0.9}};  // second row does not sum to 1
  CHECK_FALSE(bad.valid());
  bad.weights[1][0] = 1.0;
  CHECK(bad.valid());
  bad.neighbors[0] = {1, 1};  // self-membership violated
  CHECK_FALSE(bad.valid());
}
