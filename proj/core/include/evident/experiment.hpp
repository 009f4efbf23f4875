#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evident/datagen.hpp"
#include "evident/metrics.hpp"
#include "evident/model.hpp"

namespace evident {

// Top of the configuration tree; every artifact embeds its JSON echo.
struct ExperimentConfig {
  GenConfig data;
  ModelConfig model;
  TrainConfig optimizer;
  std::vector<std::string> mechanisms = {"pe", "ne", "pne", "belief"};
  std::uint64_t seed = 1;
};

ExperimentConfig default_experiment_config();

// Loads JSON (empty path = defaults), applies dotted-path overrides like
// "optimizer.debias=false", validates. Throws std::invalid_argument on bad
// config or override syntax.
ExperimentConfig load_experiment_config(const std::string& path,
                                        const std::vector<std::string>& overrides);

// Canonical JSON serialization of a config (the echo embedded in artifacts).
std::string experiment_config_to_json(const ExperimentConfig& config);

struct EvalReport {
  std::vector<std::pair<std::string, CurveMetrics>> mechanisms;
  double closed_set_map = 0.0;
  std::vector<int> skipped_classes;
  double hsic_test = 0.0;  // constraint value over the full test set
};

// Scores every test actor with all requested novelty mechanisms, computes the
// open-set curves, closed-set mAP on the known test actors, and the test-set
// constraint value.
EvalReport evaluate(const ExperimentConfig& config, const Dataset& dataset,
                    const NetworkParams& params, const ModelConfig& model);

// Raised when a convergence certificate fails (CLI exit code 3).
class CertificateViolation : public std::runtime_error {
 public:
  explicit CertificateViolation(const std::string& what)
      : std::runtime_error(what) {}
};

// File-level runners behind the CLI subcommands. All throw:
//   std::invalid_argument  -> usage/config error
//   CertificateViolation   -> failed certificate
//   std::runtime_error     -> runtime/numeric failure
void run_generate(const ExperimentConfig& config, const std::string& out_dir);
void run_train(const ExperimentConfig& config, const std::string& data_dir,
               const std::string& out_dir);
void run_eval(const ExperimentConfig& config, const std::string& data_dir,
              const std::string& checkpoint_path, const std::string& out_path);
// Runs the built-in convex certification suite; writes certificates.json and
// one trace CSV per problem; throws CertificateViolation on any failure.
void run_verify_bounds(const std::string& out_dir);
void run_report(const std::vector<std::string>& metrics_paths,
                const std::string& trace_csv_path, const std::string& out_path);

// Paths used inside a data/run directory.
std::string dataset_jsonl_path(const std::string& dir);
std::string dataset_meta_path(const std::string& dir);
std::string checkpoint_path(const std::string& dir);
std::string train_trace_path(const std::string& dir);

}  // namespace evident
