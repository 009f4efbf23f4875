#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "evident/datagen.hpp"
#include "evident/optimizer.hpp"
#include "evident/random.hpp"

namespace evident {

// Evidence function applied to the output layer (result is shifted by +1 so
// evidence stays >= 1). Hidden layers always use ReLU.
enum class EvidenceMode { Softplus, Relu };

struct ModelConfig {
  int d_in = 32;
  std::vector<int> hidden = {64, 64};
  int K = 6;  // classes; the output layer is 2K wide (positive/negative half)
  EvidenceMode evidence = EvidenceMode::Softplus;
};

struct NetworkParams {
  std::vector<Eigen::MatrixXd> W;  // layer l: fan_in x fan_out
  std::vector<Eigen::VectorXd> b;

  Eigen::Index parameter_count() const;
  Vector flatten() const;
  void unflatten(const Vector& flat);  // into already-allocated shapes
  static NetworkParams zeros(const ModelConfig& config);
};

// Uniform init in +-sqrt(6/(fan_in+fan_out)), biases zero.
NetworkParams init_params(const ModelConfig& config, RandomStream& rng);

struct ForwardResult {
  Eigen::MatrixXd alpha;           // n x K, >= 1
  Eigen::MatrixXd beta;            // n x K, >= 1
  Eigen::MatrixXd z;               // n x 2K raw output-layer values
  Eigen::MatrixXd pooled_context;  // n x 1, mean over the context columns
  std::vector<Eigen::MatrixXd> activations;  // input, then hidden outputs
  std::vector<int> context_cols;   // echo of the pooling columns
  std::uint64_t fingerprint = 0;   // params+batch hash; guards backward()
};

ForwardResult forward(const NetworkParams& params, const ModelConfig& config,
                      const Eigen::MatrixXd& features,
                      const std::vector<int>& context_cols);

// Pullback of an output-layer cotangent dz (n x 2K) to a flat parameter
// gradient, using the cached activations from a forward pass.
Vector backprop_from_dz(const NetworkParams& params, const ForwardResult& fwd,
                        Eigen::MatrixXd dz);

// Gradient of  batch_beta_loss + lambda * (hsic(Z, pooled) - gamma)  with
// respect to the flattened parameters. HSIC bandwidths are the batch medians,
// held fixed (stop-gradient). gamma and delta only shift the objective value,
// so they do not enter the gradient. Throws std::runtime_error if the forward
// cache does not match (stale fingerprint).
Vector backward(const NetworkParams& params, const ModelConfig& config,
                const ForwardResult& fwd, const Eigen::MatrixXd& y,
                double lambda, double gamma = 0.0, double delta = 0.0);

struct TrainConfig {
  int epochs = 60;
  int batch_size = 64;
  double eta1 = 3e-3;
  double eta2 = 5.0;
  double delta = 1e-4;
  double gamma = 1e-3;
  bool debias = true;  // false freezes the dual variable at 0
  ResetMode reset = ResetMode::NoReset;  // averaged iterate read out at the end
  AveragingMode averaging = AveragingMode::ProperMean;
  int min_batch = 4;  // tail batches below this are skipped
};

struct TrainStepRow {
  int step;
  double loss;    // batch beta loss at the new iterate
  double hsic;    // constraint value at the running average
  double lambda;
};

struct TrainResult {
  NetworkParams params;  // averaged parameters
  ModelConfig model;
  std::vector<TrainStepRow> trace;
  double initial_loss = 0.0;  // full-train beta loss at init
  double final_loss = 0.0;    // full-train beta loss at the averaged params
  double final_lambda = 0.0;
};

// Trains on dataset.train with Algorithm-1 steps per minibatch; deterministic
// given the stream. Requires config.K == dataset known classes and matching
// d_in. Throws std::runtime_error on divergence.
TrainResult train(const ModelConfig& model_config, const TrainConfig& train_config,
                  const Dataset& dataset, RandomStream& rng);

// CSV with header step,loss,hsic,lambda. A nonempty comment is written
// first as a '#'-prefixed line (config echo).
void write_train_trace_csv(const std::string& path,
                           const std::vector<TrainStepRow>& trace,
                           const std::string& comment = "");

// Lossless JSON checkpoint (architecture + flat weights).
void save_checkpoint(const std::string& path, const NetworkParams& params,
                     const ModelConfig& config);
std::pair<NetworkParams, ModelConfig> load_checkpoint(const std::string& path);

}  // namespace evident
