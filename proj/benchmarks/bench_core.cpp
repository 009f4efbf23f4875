#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "evident/beta_loss.hpp"
#include "evident/hsic.hpp"
#include "evident/metrics.hpp"
#include "evident/model.hpp"
#include "evident/numerics.hpp"
#include "evident/optimizer.hpp"
#include "evident/random.hpp"

using namespace evident;

namespace {

Eigen::MatrixXd normal_matrix(RandomStream& rng, int n, int d) {
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

void BM_digamma(benchmark::State& state) {
  double x = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(digamma(x));
    x += 0.1;
    if (x > 80.0) x = 0.5;
  }
}
BENCHMARK(BM_digamma);

void BM_trigamma(benchmark::State& state) {
  double x = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(trigamma(x));
    x += 0.1;
    if (x > 80.0) x = 0.5;
  }
}
BENCHMARK(BM_trigamma);

void BM_beta_loss_batch(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int K = 6;
  RandomStream rng(1);
  Eigen::MatrixXd A(n, K), B(n, K), Y(n, K);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < K; ++j) {
      A(i, j) = rng.uniform(1.0, 30.0);
      B(i, j) = rng.uniform(1.0, 30.0);
      Y(i, j) = rng.uniform() < 0.5 ? 0.0 : 1.0;
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(beta_loss(A, B, Y).total);
    benchmark::DoNotOptimize(beta_loss_grad(A, B, Y).d_alpha);
  }
}
BENCHMARK(BM_beta_loss_batch)->Arg(64)->Arg(256);

void BM_hsic_value(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  RandomStream rng(2);
  const Eigen::MatrixXd Z = normal_matrix(rng, n, 12);
  const Eigen::MatrixXd X = normal_matrix(rng, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(hsic(Z, X));
}
BENCHMARK(BM_hsic_value)->Arg(128)->Arg(256);

void BM_hsic_gradient(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  RandomStream rng(3);
  const Eigen::MatrixXd Z = normal_matrix(rng, n, 12);
  const Eigen::MatrixXd X = normal_matrix(rng, n, 1);
  const double bw_z = median_bandwidth(Z);
  const double bw_x = median_bandwidth(X);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hsic_grad_fixed(Z, X, bw_z, bw_x));
  }
}
BENCHMARK(BM_hsic_gradient)->Arg(64)->Arg(128);

void BM_primal_dual_step(benchmark::State& state) {
  const SuiteEntry entry = builtin_certification_suite().front();
  PrimalState primal(entry.problem.theta0, /*keep_history=*/false);
  DualState dual;
  dual.eta2 = entry.config.eta2;
  dual.delta = entry.config.delta;
  Alg1Options options;
  options.primal_mode = PrimalMode::Exact;
  options.exact_argmin = entry.problem.exact_argmin;
  for (auto _ : state) {
    algorithm1_step(primal, dual, entry.problem.loss, entry.problem.constraint,
                    options);
  }
}
BENCHMARK(BM_primal_dual_step);

void BM_network_forward_backward(benchmark::State& state) {
  ModelConfig config;
  config.d_in = 32;
  config.hidden = {64, 64};
  config.K = 6;
  RandomStream rng(4);
  const NetworkParams params = init_params(config, rng);
  const Eigen::MatrixXd X = normal_matrix(rng, 64, config.d_in);
  Eigen::MatrixXd Y(64, config.K);
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < config.K; ++j)
      Y(i, j) = rng.uniform() < 0.5 ? 0.0 : 1.0;
  const std::vector<int> ctx = {24, 25, 26, 27, 28, 29, 30, 31};
  for (auto _ : state) {
    const ForwardResult f = forward(params, config, X, ctx);
    benchmark::DoNotOptimize(backward(params, config, f, Y, 0.5));
  }
}
BENCHMARK(BM_network_forward_backward);

void BM_ranking_metrics(benchmark::State& state) {
  const int n = 10000;
  RandomStream rng(5);
  ScoredSet set;
  set.scores.reserve(n);
  set.truths.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int t = static_cast<int>(rng.uniform_int(2));
    set.truths.push_back(t);
    set.scores.push_back(rng.normal() + (t == 1 ? 0.8 : 0.0));
  }
  for (auto _ : state) benchmark::DoNotOptimize(binary_curve_metrics(set));
}
BENCHMARK(BM_ranking_metrics);

}  // namespace

BENCHMARK_MAIN();
