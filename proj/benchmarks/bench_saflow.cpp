#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>

#include "saflow/affinity.hpp"
#include "saflow/flow.hpp"
#include "saflow/image.hpp"
#include "saflow/manifold.hpp"
#include "saflow/patchlab.hpp"
#include "saflow/selfassign.hpp"

namespace {

using namespace saflow;

affinity::FeatureSet make_features(Eigen::Index n, Eigen::Index dim,
                                   unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss;
  affinity::FeatureSet f;
  f.F.resize(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) f.F(i, j) = gauss(rng);
  return f;
}

// Strictly interior row-stochastic state, the shape the flow maintains.
Eigen::MatrixXd make_state(Eigen::Index n, Eigen::Index c, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd V(n, c);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < c; ++j) V(i, j) = gauss(rng);
  const Eigen::MatrixXd base =
      manifold::barycenter(c).transpose().replicate(n, 1);
  return manifold::lift_rows(base, V);
}

image::Image make_noise_image(int rows, int cols, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  image::Image img = image::make_image(rows, cols, 1);
  for (Eigen::Index p = 0; p < img.pixel_count(); ++p)
    img.values(p, 0) = unit(rng);
  return img;
}

void bm_gaussian_kernel(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const affinity::FeatureSet f = make_features(n, 3, 11);
  for (auto _ : state)
    benchmark::DoNotOptimize(affinity::gaussian_kernel(f, 0.5));
  state.SetComplexityN(n);
}
BENCHMARK(bm_gaussian_kernel)->Arg(512)->Arg(1024)->Arg(2048)->Complexity();

void bm_kernel_apply_dense(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const affinity::AffinityOperator K =
      affinity::gaussian_kernel(make_features(n, 3, 13), 0.5);
  const Eigen::MatrixXd X = make_state(n, 8, 17);
  for (auto _ : state) benchmark::DoNotOptimize(K.apply(X));
  state.SetComplexityN(n);
}
BENCHMARK(bm_kernel_apply_dense)->Arg(1024)->Arg(4096)->Complexity();

void bm_kernel_apply_sketched(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const affinity::AffinityOperator dense =
      affinity::gaussian_kernel(make_features(n, 3, 13), 0.5);
  const affinity::AffinityOperator K = affinity::nystrom_sketch(dense, 128, 7);
  const Eigen::MatrixXd X = make_state(n, 8, 17);
  for (auto _ : state) benchmark::DoNotOptimize(K.apply(X));
  state.SetComplexityN(n);
}
BENCHMARK(bm_kernel_apply_sketched)->Arg(1024)->Arg(4096)->Complexity();

// range(0) selects s in {0, 1/2, 1}: both closed-form endpoints and the
// eigendecomposition path for interior s.
void bm_grad_objective(benchmark::State& state) {
  const double s = static_cast<double>(state.range(0)) / 2.0;
  const Eigen::Index n = 1024;
  const affinity::AffinityOperator K =
      affinity::gaussian_kernel(make_features(n, 3, 19), 0.5);
  const Eigen::MatrixXd W = make_state(n, 8, 23);
  for (auto _ : state)
    benchmark::DoNotOptimize(selfassign::grad_objective(W, K, s));
}
BENCHMARK(bm_grad_objective)->Arg(0)->Arg(1)->Arg(2);

// One full flow iteration: gradient, likelihood, neighborhood averaging,
// Euler step with renormalization.
void bm_flow_iteration(benchmark::State& state) {
  const int side = 32;
  const Eigen::Index n = side * side;
  const affinity::AffinityOperator K =
      affinity::gaussian_kernel(make_features(n, 3, 29), 0.5);
  const flow::NeighborhoodSystem nbhd = flow::grid_uniform(side, side, 3);
  const Eigen::MatrixXd W0 = make_state(n, 8, 31);
  for (auto _ : state) {
    Eigen::MatrixXd W = W0;
    const Eigen::MatrixXd grad = selfassign::grad_objective(W, K, 0.0);
    const Eigen::MatrixXd L = flow::generalized_likelihood(W, grad, 0.1);
    const Eigen::MatrixXd S = flow::similarity(W, L, nbhd);
    flow::euler_step(W, S, 0.1, 1e-10);
    benchmark::DoNotOptimize(W);
  }
}
BENCHMARK(bm_flow_iteration);

void bm_patch_distance_matrix(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const image::Image img = make_noise_image(side, side, 37);
  const patchlab::PatchGrid grid = patchlab::extract_patches(img, 7);
  for (auto _ : state)
    benchmark::DoNotOptimize(patchlab::sym_patch_distance_matrix(grid));
  state.SetComplexityN(grid.count());
}
BENCHMARK(bm_patch_distance_matrix)->Arg(16)->Arg(24)->Arg(32)->Complexity();

void bm_lift_rows(benchmark::State& state) {
  const Eigen::Index n = 4096, c = 16;
  const Eigen::MatrixXd W = make_state(n, c, 41);
  const Eigen::MatrixXd X = make_state(n, c, 43);
  for (auto _ : state) benchmark::DoNotOptimize(manifold::lift_rows(W, X));
}
BENCHMARK(bm_lift_rows);

}  // namespace

BENCHMARK_MAIN();
