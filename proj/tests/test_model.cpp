#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "doctest.h"
#include "evident/beta_loss.hpp"
#include "evident/datagen.hpp"
#include "evident/hsic.hpp"
#include "evident/model.hpp"
#include "evident/numerics.hpp"
#include "evident/random.hpp"

using namespace evident;

namespace {

Eigen::MatrixXd random_batch(RandomStream& rng, int n, int d) {
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

Eigen::MatrixXd random_labels(RandomStream& rng, int n, int K) {
  Eigen::MatrixXd y(n, K);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < K; ++j) y(i, j) = rng.uniform() < 0.5 ? 0.0 : 1.0;
  return y;
}

// Smallest |pre-activation| over all hidden units; finite differences
// need every ReLU comfortably away from its kink.
double hidden_kink_margin(const NetworkParams& params,
                          const Eigen::MatrixXd& features) {
  double margin = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd act = features;
  for (std::size_t l = 0; l + 1 < params.W.size(); ++l) {
    Eigen::MatrixXd pre =
        (act * params.W[l]).rowwise() + params.b[l].transpose();
    margin = std::min(margin, pre.cwiseAbs().minCoeff());
    act = pre.cwiseMax(0.0);
  }
  return margin;
}

// Lagrangian objective value with HSIC bandwidths pinned to the base point.
double objective_at(const NetworkParams& params, const ModelConfig& config,
                    const Eigen::MatrixXd& X, const std::vector<int>& ctx,
                    const Eigen::MatrixXd& y, double lambda, double bw_z,
                    double bw_x) {
  const ForwardResult f = forward(params, config, X, ctx);
  double value = beta_loss(f.alpha, f.beta, y).total;
  if (lambda != 0.0) {
    value += lambda * hsic_fixed(f.z, f.pooled_context, bw_z, bw_x);
  }
  return value;
}

double max_rel_error(const Vector& analytic, const Vector& fd) {
  const double denom = std::max(analytic.cwiseAbs().maxCoeff(), 1e-8);
  return (analytic - fd).cwiseAbs().maxCoeff() / denom;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("zero parameters give the constant evidence floor") {
  ModelConfig config;
  config.d_in = 5;
  config.hidden = {6};
  config.K = 3;
  RandomStream rng(60);
  const Eigen::MatrixXd X = random_batch(rng, 7, config.d_in);
  const std::vector<int> ctx = {3, 4};

  NetworkParams zeros = NetworkParams::zeros(config);
  const ForwardResult soft = forward(zeros, config, X, ctx);
  const double floor_val = 1.0 + std::log(2.0);
  CHECK((soft.alpha.array() - floor_val).abs().maxCoeff() < 1e-15);
  CHECK((soft.beta.array() - floor_val).abs().maxCoeff() < 1e-15);

  config.evidence = EvidenceMode::Relu;
  const ForwardResult relu = forward(zeros, config, X, ctx);
  CHECK((relu.alpha.array() == 1.0).all());
  CHECK((relu.beta.array() == 1.0).all());
}

TEST_CASE("evidence respects its floor on random inputs") {
  ModelConfig config;
  config.d_in = 8;
  config.hidden = {16, 8};
  config.K = 4;
  RandomStream rng(61);
  const NetworkParams params = init_params(config, rng);
  const Eigen::MatrixXd X = 3.0 * random_batch(rng, 1000, config.d_in);
  const ForwardResult f = forward(params, config, X, {6, 7});
  CHECK(f.alpha.minCoeff() >= 1.0);
  CHECK(f.beta.minCoeff() >= 1.0);
  CHECK(f.alpha.rows() == 1000);
  CHECK(f.alpha.cols() == config.K);
  CHECK(f.z.cols() == 2 * config.K);
  // the evidence transform ties z to alpha
  for (int i = 0; i < 5; ++i) {
    CHECK(f.alpha(i, 0) ==
          doctest::Approx(softplus(f.z(i, 0)) + 1.0).epsilon(1e-14));
    CHECK(f.beta(i, 0) ==
          doctest::Approx(softplus(f.z(i, config.K)) + 1.0).epsilon(1e-14));
  }
}

TEST_CASE("pooled context is the row mean of the context columns") {
  ModelConfig config;
  config.d_in = 4;
  config.hidden = {};
  config.K = 1;
  Eigen::MatrixXd X(2, 4);
  X << 1.0, 2.0, 3.0, 5.0,
       0.0, -1.0, 4.0, 8.0;
  const NetworkParams zeros = NetworkParams::zeros(config);
  const ForwardResult f = forward(zeros, config, X, {2, 3});
  REQUIRE(f.pooled_context.rows() == 2);
  REQUIRE(f.pooled_context.cols() == 1);
  CHECK(f.pooled_context(0, 0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(f.pooled_context(1, 0) == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("flatten and unflatten round-trip") {
  ModelConfig config;
  config.d_in = 9;
  config.hidden = {11, 5};
  config.K = 3;
  RandomStream rng(62);
  const NetworkParams params = init_params(config, rng);
  const Vector flat = params.flatten();
  CHECK(flat.size() == params.parameter_count());

  NetworkParams other = NetworkParams::zeros(config);
  other.unflatten(flat);
  for (std::size_t l = 0; l < params.W.size(); ++l) {
    CHECK(other.W[l] == params.W[l]);
    CHECK(other.b[l] == params.b[l]);
  }
}

TEST_CASE("initialization stays inside the fan bounds with zero biases") {
  ModelConfig config;
  config.d_in = 10;
  config.hidden = {20};
  config.K = 4;
  RandomStream rng(63);
  const NetworkParams params = init_params(config, rng);
  REQUIRE(params.W.size() == 2);
  const double bound0 = std::sqrt(6.0 / (10.0 + 20.0));
  const double bound1 = std::sqrt(6.0 / (20.0 + 8.0));
  CHECK(params.W[0].cwiseAbs().maxCoeff() <= bound0);
  CHECK(params.W[1].cwiseAbs().maxCoeff() <= bound1);
  CHECK(params.b[0].cwiseAbs().maxCoeff() == 0.0);
  CHECK(params.b[1].cwiseAbs().maxCoeff() == 0.0);
  // not degenerate
  CHECK(params.W[0].cwiseAbs().maxCoeff() > 0.1 * bound0);
}

TEST_CASE("backward matches finite differences") {
  ModelConfig config;
  config.d_in = 6;
  config.hidden = {8};
  config.K = 2;
  const std::vector<int> ctx = {4, 5};
  const int n = 5;
  RandomStream rng(64);

  for (int trial = 0; trial < 5; ++trial) {
    NetworkParams params;
    Eigen::MatrixXd X;
    double margin = 0.0;
    do {
      params = init_params(config, rng);
      X = random_batch(rng, n, config.d_in);
      margin = hidden_kink_margin(params, X);
    } while (margin < 1e-4);
    const Eigen::MatrixXd y = random_labels(rng, n, config.K);
    const ForwardResult f = forward(params, config, X, ctx);
    const double bw_z = median_bandwidth(f.z);
    const double bw_x = median_bandwidth(f.pooled_context);

    for (const double lambda : {0.0, 1.0}) {
      const Vector analytic = backward(params, config, f, y, lambda);
      const Vector flat = params.flatten();
      Vector fd(flat.size());
      const double h = 1e-6;
      NetworkParams probe = NetworkParams::zeros(config);
      for (Eigen::Index i = 0; i < flat.size(); ++i) {
        Vector plus = flat, minus = flat;
        plus[i] += h;
        minus[i] -= h;
        probe.unflatten(plus);
        const double up = objective_at(probe, config, X, ctx, y, lambda, bw_z, bw_x);
        probe.unflatten(minus);
        const double dn = objective_at(probe, config, X, ctx, y, lambda, bw_z, bw_x);
        fd[i] = (up - dn) / (2.0 * h);
      }
      CHECK(max_rel_error(analytic, fd) < (lambda == 0.0 ? 1e-5 : 1e-4));
    }
  }
}

TEST_CASE("backward rejects a stale forward cache") {
  ModelConfig config;
  config.d_in = 4;
  config.hidden = {6};
  config.K = 2;
  RandomStream rng(65);
  NetworkParams params = init_params(config, rng);
  const Eigen::MatrixXd X = random_batch(rng, 4, config.d_in);
  const Eigen::MatrixXd y = random_labels(rng, 4, config.K);
  const ForwardResult f = forward(params, config, X, {2, 3});
  params.W[0](0, 0) += 0.25;  // parameters moved after the cached pass
  CHECK_THROWS_AS(backward(params, config, f, y, 0.0), std::runtime_error);
}

TEST_CASE("positive labels push the alpha head up and the beta head down") {
  ModelConfig config;
  config.d_in = 3;
  config.hidden = {};
  config.K = 2;
  const std::vector<int> ctx = {2};
  Eigen::MatrixXd X(1, 3);
  X << 1.0, 0.5, 0.25;
  Eigen::MatrixXd y = Eigen::MatrixXd::Ones(1, config.K);

  for (const double alpha_bias : {0.0, -5.0}) {
    NetworkParams params = NetworkParams::zeros(config);
    params.b[0].head(config.K).array() = alpha_bias;  // saturate the alpha head
    const ForwardResult f = forward(params, config, X, ctx);
    const Vector g = backward(params, config, f, y, 0.0);

    // flat layout: W (column-major), then biases; alpha-head bias first
    const Eigen::Index bias_offset = params.W[0].size();
    for (int k = 0; k < config.K; ++k) {
      CHECK(g[bias_offset + k] < 0.0);             // grow positive evidence
      CHECK(g[bias_offset + config.K + k] > 0.0);  // shrink negative evidence
    }
  }
}

TEST_CASE("training reduces the loss on unbiased data") {
  GenConfig gen;
  gen.classes_per_subset = 2;
  gen.samples_train = 600;
  gen.samples_test = 100;
  gen.max_labels_per_actor = 1;
  gen.d_content = 10;
  gen.d_context = 4;
  gen.bias_strength = 0.0;
  gen.seed = 5;
  const Dataset ds = generate_dataset(gen);

  ModelConfig model;
  model.d_in = ds.d_in();
  model.hidden = {24};
  model.K = ds.num_known_classes();

  TrainConfig tc;
  tc.epochs = 30;
  tc.batch_size = 64;
  tc.debias = false;
  RandomStream rng(17);
  const TrainResult result = train(model, tc, ds, rng);
  CHECK(result.final_loss < 0.5 * result.initial_loss);
  CHECK(result.final_lambda == 0.0);

  // evidence floor survives training
  Eigen::MatrixXd X(ds.train.size(), model.d_in);
  for (std::size_t i = 0; i < ds.train.size(); ++i)
    X.row(static_cast<Eigen::Index>(i)) = ds.train[i].features.transpose();
  const ForwardResult f = forward(result.params, model, X, ds.context_columns());
  CHECK(f.alpha.minCoeff() >= 1.0);
  CHECK(f.beta.minCoeff() >= 1.0);
}

TEST_CASE("a huge relaxation keeps the dual inactive") {
  GenConfig gen;
  gen.classes_per_subset = 2;
  gen.samples_train = 200;
  gen.samples_test = 100;
  gen.d_content = 8;
  gen.d_context = 4;
  gen.seed = 6;
  const Dataset ds = generate_dataset(gen);

  ModelConfig model;
  model.d_in = ds.d_in();
  model.hidden = {16};
  model.K = ds.num_known_classes();

  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 64;
  tc.debias = true;
  tc.gamma = 10.0;
  RandomStream rng(18);
  const TrainResult result = train(model, tc, ds, rng);
  CHECK(result.final_lambda == 0.0);
  for (const TrainStepRow& row : result.trace) CHECK(row.lambda == 0.0);
}

TEST_CASE("one epoch with one batch is exactly one optimizer step") {
  GenConfig gen;
  gen.classes_per_subset = 2;
  gen.samples_train = 64;
  gen.samples_test = 50;
  gen.d_content = 8;
  gen.d_context = 4;
  gen.seed = 9;
  const Dataset ds = generate_dataset(gen);

  ModelConfig model;
  model.d_in = ds.d_in();
  model.hidden = {12};
  model.K = ds.num_known_classes();

  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 64;
  tc.eta2 = 5.0;
  RandomStream rng(21);
  const TrainResult result = train(model, tc, ds, rng);

  // mirror: identical stream usage, one explicit optimizer step
  RandomStream mirror_rng(21);
  NetworkParams net = init_params(model, mirror_rng);
  std::vector<int> order(ds.train.size());
  std::iota(order.begin(), order.end(), 0);
  mirror_rng.shuffle(order);

  const std::vector<int> ctx = ds.context_columns();
  Eigen::MatrixXd Xb(64, model.d_in);
  Eigen::MatrixXd Yb(64, model.K);
  for (int r = 0; r < 64; ++r) {
    Xb.row(r) = ds.train[static_cast<std::size_t>(order[r])].features.transpose();
    Yb.row(r) = ds.train[static_cast<std::size_t>(order[r])]
                    .labels.head(model.K)
                    .transpose();
  }

  NetworkParams scratch = NetworkParams::zeros(model);
  Objective loss_obj;
  loss_obj.value = [&](const Vector& theta) {
    scratch.unflatten(theta);
    const ForwardResult f = forward(scratch, model, Xb, ctx);
    return beta_loss(f.alpha, f.beta, Yb).total;
  };
  loss_obj.gradient = [&](const Vector& theta) {
    scratch.unflatten(theta);
    const ForwardResult f = forward(scratch, model, Xb, ctx);
    return backward(scratch, model, f, Yb, 0.0);
  };
  Objective g_obj;
  g_obj.value = [&](const Vector& theta) {
    scratch.unflatten(theta);
    const ForwardResult f = forward(scratch, model, Xb, ctx);
    return hsic(f.z, f.pooled_context);
  };
  g_obj.gradient = [&](const Vector& theta) {
    scratch.unflatten(theta);
    const ForwardResult f = forward(scratch, model, Xb, ctx);
    return backprop_from_dz(
        scratch, f,
        hsic_grad_fixed(f.z, f.pooled_context, median_bandwidth(f.z),
                        median_bandwidth(f.pooled_context)));
  };

  PrimalState primal(net.flatten(), /*keep_history=*/false);
  DualState dual;
  dual.eta2 = tc.eta2;
  dual.delta = tc.delta;
  dual.gamma = tc.gamma;
  Alg1Options options;
  options.eta1 = tc.eta1;
  options.averaging = tc.averaging;
  options.reset = tc.reset;
  algorithm1_step(primal, dual, loss_obj, g_obj, options);

  CHECK((result.params.flatten() - primal.average).norm() == 0.0);
  REQUIRE(result.trace.size() == 1);
  CHECK(result.trace[0].lambda == dual.lambda);
}

TEST_CASE("training is deterministic in the seed") {
  GenConfig gen;
  gen.classes_per_subset = 2;
  gen.samples_train = 256;
  gen.samples_test = 50;
  gen.d_content = 8;
  gen.d_context = 4;
  gen.seed = 10;
  const Dataset ds = generate_dataset(gen);

  ModelConfig model;
  model.d_in = ds.d_in();
  model.hidden = {16};
  model.K = ds.num_known_classes();

  TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 64;

  RandomStream r1(33), r2(33);
  const TrainResult a = train(model, tc, ds, r1);
  const TrainResult b = train(model, tc, ds, r2);
  CHECK(a.final_loss == b.final_loss);
  CHECK((a.params.flatten() - b.params.flatten()).norm() == 0.0);
}

TEST_CASE("train validates its configuration") {
  GenConfig gen;
  gen.classes_per_subset = 2;
  gen.samples_train = 50;
  gen.samples_test = 20;
  gen.d_content = 8;
  gen.d_context = 4;
  const Dataset ds = generate_dataset(gen);

  RandomStream rng(1);
  TrainConfig tc;
  tc.epochs = 1;
  ModelConfig wrong_k;
  wrong_k.d_in = ds.d_in();
  wrong_k.K = 3;
  CHECK_THROWS_AS(train(wrong_k, tc, ds, rng), std::invalid_argument);
  ModelConfig wrong_d;
  wrong_d.d_in = ds.d_in() + 1;
  wrong_d.K = ds.num_known_classes();
  CHECK_THROWS_AS(train(wrong_d, tc, ds, rng), std::invalid_argument);
}

TEST_CASE("checkpoints round-trip losslessly") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "evident_checkpoint_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string path = (dir / "checkpoint.json").string();

  ModelConfig config;
  config.d_in = 7;
  config.hidden = {9, 4};
  config.K = 2;
  config.evidence = EvidenceMode::Relu;
  RandomStream rng(66);
  const NetworkParams params = init_params(config, rng);
  save_checkpoint(path, params, config);

  const auto [loaded, loaded_config] = load_checkpoint(path);
  CHECK(loaded_config.d_in == config.d_in);
  CHECK(loaded_config.hidden == config.hidden);
  CHECK(loaded_config.K == config.K);
  CHECK(loaded_config.evidence == config.evidence);
  CHECK((loaded.flatten() - params.flatten()).norm() == 0.0);

  CHECK_THROWS_AS(load_checkpoint((dir / "missing.json").string()),
                  std::runtime_error);
  fs::remove_all(dir);
}

}  // TEST_SUITE
