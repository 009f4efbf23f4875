#include "evident/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "evident/beta_loss.hpp"
#include "evident/hsic.hpp"
#include "evident/numerics.hpp"

namespace evident {

namespace {

std::vector<int> layer_sizes(const ModelConfig& c) {
  std::vector<int> sizes;
  sizes.push_back(c.d_in);
  for (int h : c.hidden) sizes.push_back(h);
  sizes.push_back(2 * c.K);
  return sizes;
}

std::uint64_t fnv1a(std::uint64_t h, const double* data, Eigen::Index count) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  const std::size_t n = static_cast<std::size_t>(count) * sizeof(double);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t batch_fingerprint(const NetworkParams& params,
                                const Eigen::MatrixXd& features,
                                const std::vector<int>& context_cols) {
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t l = 0; l < params.W.size(); ++l) {
    h = fnv1a(h, params.W[l].data(), params.W[l].size());
    h = fnv1a(h, params.b[l].data(), params.b[l].size());
  }
  h = fnv1a(h, features.data(), features.size());
  for (int c : context_cols) {
    h ^= static_cast<std::uint64_t>(c) + 0x9E3779B97F4A7C15ULL;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

Eigen::Index NetworkParams::parameter_count() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < W.size(); ++l) n += W[l].size() + b[l].size();
  return n;
}

Vector NetworkParams::flatten() const {
  Vector flat(parameter_count());
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < W.size(); ++l) {
    flat.segment(at, W[l].size()) =
        Eigen::Map<const Vector>(W[l].data(), W[l].size());
    at += W[l].size();
    flat.segment(at, b[l].size()) = b[l];
    at += b[l].size();
  }
  return flat;
}

void NetworkParams::unflatten(const Vector& flat) {
  if (flat.size() != parameter_count()) {
    throw std::invalid_argument("unflatten: size mismatch");
  }
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < W.size(); ++l) {
    Eigen::Map<Vector>(W[l].data(), W[l].size()) = flat.segment(at, W[l].size());
    at += W[l].size();
    b[l] = flat.segment(at, b[l].size());
    at += b[l].size();
  }
}

NetworkParams NetworkParams::zeros(const ModelConfig& config) {
  const std::vector<int> sizes = layer_sizes(config);
  NetworkParams p;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    p.W.push_back(Eigen::MatrixXd::Zero(sizes[l], sizes[l + 1]));
    p.b.push_back(Eigen::VectorXd::Zero(sizes[l + 1]));
  }
  return p;
}

NetworkParams init_params(const ModelConfig& config, RandomStream& rng) {
  NetworkParams p = NetworkParams::zeros(config);
  for (std::size_t l = 0; l < p.W.size(); ++l) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(p.W[l].rows() + p.W[l].cols()));
    for (Eigen::Index j = 0; j < p.W[l].cols(); ++j) {
      for (Eigen::Index i = 0; i < p.W[l].rows(); ++i) {
        p.W[l](i, j) = rng.uniform(-limit, limit);
      }
    }
  }
  return p;
}

ForwardResult forward(const NetworkParams& params, const ModelConfig& config,
                      const Eigen::MatrixXd& features,
                      const std::vector<int>& context_cols) {
  if (features.cols() != config.d_in) {
    throw std::invalid_argument("forward: feature dimension mismatch");
  }
  for (int c : context_cols) {
    if (c < 0 || c >= config.d_in) {
      throw std::invalid_argument("forward: context column out of range");
    }
  }
  const std::size_t n_layers = params.W.size();
  const int K = config.K;

  ForwardResult r;
  r.activations.reserve(n_layers);
  r.activations.push_back(features);
  for (std::size_t l = 0; l + 1 < n_layers; ++l) {
    Eigen::MatrixXd h =
        (r.activations.back() * params.W[l]).rowwise() + params.b[l].transpose();
    r.activations.push_back(h.cwiseMax(0.0));
  }
  r.z = (r.activations.back() * params.W[n_layers - 1]).rowwise() +
        params.b[n_layers - 1].transpose();

  r.alpha.resize(r.z.rows(), K);
  r.beta.resize(r.z.rows(), K);
  for (Eigen::Index i = 0; i < r.z.rows(); ++i) {
    for (int k = 0; k < K; ++k) {
      if (config.evidence == EvidenceMode::Softplus) {
        r.alpha(i, k) = 1.0 + softplus(r.z(i, k));
        r.beta(i, k) = 1.0 + softplus(r.z(i, K + k));
      } else {
        r.alpha(i, k) = 1.0 + std::max(r.z(i, k), 0.0);
        r.beta(i, k) = 1.0 + std::max(r.z(i, K + k), 0.0);
      }
    }
  }

  if (!context_cols.empty()) {
    r.pooled_context = Eigen::MatrixXd::Zero(features.rows(), 1);
    for (int c : context_cols) r.pooled_context.col(0) += features.col(c);
    r.pooled_context /= static_cast<double>(context_cols.size());
  } else {
    r.pooled_context = Eigen::MatrixXd::Zero(features.rows(), 1);
  }

  r.context_cols = context_cols;
  r.fingerprint = batch_fingerprint(params, features, context_cols);
  return r;
}

Vector backprop_from_dz(const NetworkParams& params, const ForwardResult& fwd,
                        Eigen::MatrixXd dz) {
  const std::size_t n_layers = params.W.size();
  std::vector<Eigen::MatrixXd> dW(n_layers);
  std::vector<Eigen::VectorXd> db(n_layers);

  Eigen::MatrixXd delta = std::move(dz);
  for (std::size_t l = n_layers; l-- > 0;) {
    dW[l] = fwd.activations[l].transpose() * delta;
    db[l] = delta.colwise().sum();
    if (l > 0) {
      delta = delta * params.W[l].transpose();
      // ReLU mask: activations[l] holds the post-activation of hidden layer l
      delta.array() *= (fwd.activations[l].array() > 0.0).cast<double>();
    }
  }

  NetworkParams grads;
  grads.W = std::move(dW);
  grads.b = std::move(db);
  return grads.flatten();
}

namespace {

Eigen::MatrixXd evidence_chain(const ModelConfig& config,
                               const Eigen::MatrixXd& z,
                               const Eigen::MatrixXd& d_alpha,
                               const Eigen::MatrixXd& d_beta) {
  const int K = config.K;
  Eigen::MatrixXd dz(z.rows(), 2 * K);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (int k = 0; k < K; ++k) {
      const double sa = config.evidence == EvidenceMode::Softplus
                            ? softplus_prime(z(i, k))
                            : (z(i, k) > 0.0 ? 1.0 : 0.0);
      const double sb = config.evidence == EvidenceMode::Softplus
                            ? softplus_prime(z(i, K + k))
                            : (z(i, K + k) > 0.0 ? 1.0 : 0.0);
      dz(i, k) = d_alpha(i, k) * sa;
      dz(i, K + k) = d_beta(i, k) * sb;
    }
  }
  return dz;
}

}  // namespace

Vector backward(const NetworkParams& params, const ModelConfig& config,
                const ForwardResult& fwd, const Eigen::MatrixXd& y,
                double lambda, double /*gamma*/, double /*delta*/) {
  if (fwd.activations.empty() || fwd.activations.front().rows() != y.rows()) {
    throw std::runtime_error("backward: forward cache does not match batch");
  }
  if (batch_fingerprint(params, fwd.activations.front(), fwd.context_cols) !=
      fwd.fingerprint) {
    throw std::runtime_error(
        "backward: stale forward cache (parameters or batch changed)");
  }

  const BetaLossGrad bg = beta_loss_grad(fwd.alpha, fwd.beta, y);
  Eigen::MatrixXd dz = evidence_chain(config, fwd.z, bg.d_alpha, bg.d_beta);

  if (lambda != 0.0) {
    const double bw_z = median_bandwidth(fwd.z);
    const double bw_x = median_bandwidth(fwd.pooled_context);
    dz += lambda * hsic_grad_fixed(fwd.z, fwd.pooled_context, bw_z, bw_x);
  }
  return backprop_from_dz(params, fwd, std::move(dz));
}

TrainResult train(const ModelConfig& model_config, const TrainConfig& train_config,
                  const Dataset& dataset, RandomStream& rng) {
  if (model_config.K != dataset.num_known_classes()) {
    throw std::invalid_argument("train: model K must equal the known-class count");
  }
  if (model_config.d_in != dataset.d_in()) {
    throw std::invalid_argument("train: model d_in must match the dataset");
  }
  const int n = static_cast<int>(dataset.train.size());
  const int K = model_config.K;
  const std::vector<int> context_cols = dataset.context_columns();

  Eigen::MatrixXd X(n, model_config.d_in);
  Eigen::MatrixXd Y(n, K);
  for (int i = 0; i < n; ++i) {
    X.row(i) = dataset.train[static_cast<std::size_t>(i)].features.transpose();
    Y.row(i) = dataset.train[static_cast<std::size_t>(i)]
                   .labels.head(K)
                   .transpose();
  }

  NetworkParams net = init_params(model_config, rng);
  const Vector theta0 = net.flatten();

  PrimalState primal(theta0, /*keep_history=*/false);
  DualState dual;
  dual.lambda = 0.0;
  dual.eta2 = train_config.debias ? train_config.eta2 : 0.0;
  dual.delta = train_config.delta;
  dual.gamma = train_config.gamma;

  Alg1Options options;
  options.eta1 = train_config.eta1;
  options.primal_mode = PrimalMode::Adam;
  options.averaging = train_config.averaging;
  options.reset = train_config.reset;

  TrainResult result;
  result.model = model_config;
  {
    const ForwardResult f0 = forward(net, model_config, X, context_cols);
    result.initial_loss = beta_loss(f0.alpha, f0.beta, Y).total;
  }

  NetworkParams scratch = NetworkParams::zeros(model_config);
  const double diverge_scale = 1e6 * std::max(1.0, theta0.norm());

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  int global_step = 0;
  for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
    rng.shuffle(order);
    for (int start = 0; start < n; start += train_config.batch_size) {
      const int bsz = std::min(train_config.batch_size, n - start);
      if (bsz < train_config.min_batch) continue;

      Eigen::MatrixXd Xb(bsz, model_config.d_in);
      Eigen::MatrixXd Yb(bsz, K);
      for (int r = 0; r < bsz; ++r) {
        Xb.row(r) = X.row(order[static_cast<std::size_t>(start + r)]);
        Yb.row(r) = Y.row(order[static_cast<std::size_t>(start + r)]);
      }

      Objective loss_obj;
      loss_obj.value = [&](const Vector& theta) {
        scratch.unflatten(theta);
        const ForwardResult f = forward(scratch, model_config, Xb, context_cols);
        return beta_loss(f.alpha, f.beta, Yb).total;
      };
      loss_obj.gradient = [&](const Vector& theta) {
        scratch.unflatten(theta);
        const ForwardResult f = forward(scratch, model_config, Xb, context_cols);
        return backward(scratch, model_config, f, Yb, 0.0);
      };
      Objective constraint_obj;
      constraint_obj.value = [&](const Vector& theta) {
        scratch.unflatten(theta);
        const ForwardResult f = forward(scratch, model_config, Xb, context_cols);
        return hsic(f.z, f.pooled_context);
      };
      constraint_obj.gradient = [&](const Vector& theta) {
        scratch.unflatten(theta);
        const ForwardResult f = forward(scratch, model_config, Xb, context_cols);
        const double bw_z = median_bandwidth(f.z);
        const double bw_x = median_bandwidth(f.pooled_context);
        const Eigen::MatrixXd dz =
            hsic_grad_fixed(f.z, f.pooled_context, bw_z, bw_x);
        return backprop_from_dz(scratch, f, dz);
      };

      algorithm1_step(primal, dual, loss_obj, constraint_obj, options);
      global_step += 1;

      if (primal.theta.norm() > diverge_scale) {
        throw std::runtime_error("train: parameters diverged at step " +
                                 std::to_string(global_step));
      }

      TrainStepRow row;
      row.step = global_step;
      row.loss = loss_obj.value(primal.theta);
      row.hsic = constraint_obj.value(primal.average);
      row.lambda = dual.lambda;
      result.trace.push_back(row);
    }
  }

  result.params = NetworkParams::zeros(model_config);
  result.params.unflatten(primal.average);
  result.final_lambda = dual.lambda;
  {
    const ForwardResult ff =
        forward(result.params, model_config, X, context_cols);
    result.final_loss = beta_loss(ff.alpha, ff.beta, Y).total;
  }
  return result;
}

void write_train_trace_csv(const std::string& path,
                           const std::vector<TrainStepRow>& trace,
                           const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_train_trace_csv: cannot open " + path);
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "step,loss,hsic,lambda\n";
  char buf[160];
  for (const TrainStepRow& row : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", row.step, row.loss,
                  row.hsic, row.lambda);
    out << buf;
  }
}

void save_checkpoint(const std::string& path, const NetworkParams& params,
                     const ModelConfig& config) {
  nlohmann::json j;
  j["format"] = "evident-checkpoint";
  j["version"] = 1;
  j["d_in"] = config.d_in;
  j["hidden"] = config.hidden;
  j["K"] = config.K;
  j["evidence"] = config.evidence == EvidenceMode::Softplus ? "softplus" : "relu";
  const Vector flat = params.flatten();
  j["weights"] = std::vector<double>(flat.data(), flat.data() + flat.size());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << j.dump(2) << '\n';
}

std::pair<NetworkParams, ModelConfig> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("format", "") != "evident-checkpoint") {
    throw std::runtime_error("load_checkpoint: unrecognized container");
  }
  ModelConfig config;
  config.d_in = j.at("d_in").get<int>();
  config.hidden = j.at("hidden").get<std::vector<int>>();
  config.K = j.at("K").get<int>();
  config.evidence = j.at("evidence").get<std::string>() == "relu"
                        ? EvidenceMode::Relu
                        : EvidenceMode::Softplus;
  NetworkParams params = NetworkParams::zeros(config);
  const auto weights = j.at("weights").get<std::vector<double>>();
  params.unflatten(Eigen::Map<const Vector>(
      weights.data(), static_cast<Eigen::Index>(weights.size())));
  return {std::move(params), std::move(config)};
}

}  // namespace evident
