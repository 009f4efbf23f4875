// Command-line front end: generate / train / eval / verify-bounds / report.
// Exit codes: 0 success, 1 usage or config error, 2 runtime failure,
// 3 certificate violation.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evident/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
};

evident::ExperimentConfig load(const CommonArgs& args) {
  return evident::load_experiment_config(args.config_path, args.overrides);
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path,
                  "experiment config JSON (defaults used when omitted)");
  cmd->add_option("--set", args.overrides,
                  "dotted-path override, e.g. optimizer.debias=false")
      ->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evidential open-set learning toolkit"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args;
  std::string gen_out, train_data, train_out, eval_data, eval_checkpoint,
      eval_out, verify_out, report_trace, report_out;
  std::vector<std::string> report_metrics;

  CLI::App* cmd_generate = app.add_subcommand("generate", "write a synthetic dataset");
  add_common(cmd_generate, gen_args);
  cmd_generate->add_option("--out", gen_out, "output directory")->required();

  CLI::App* cmd_train = app.add_subcommand("train", "train a model on a dataset");
  add_common(cmd_train, train_args);
  cmd_train->add_option("--data", train_data, "directory holding dataset files")
      ->required();
  cmd_train->add_option("--out", train_out, "output directory")->required();

  CLI::App* cmd_eval = app.add_subcommand("eval", "score a checkpoint on a test set");
  add_common(cmd_eval, eval_args);
  cmd_eval->add_option("--data", eval_data, "directory holding dataset files")
      ->required();
  cmd_eval->add_option("--checkpoint", eval_checkpoint, "checkpoint JSON")->required();
  cmd_eval->add_option("--out", eval_out, "metrics JSON output path")->required();

  CLI::App* cmd_verify =
      app.add_subcommand("verify-bounds", "run the convex certification suite");
  cmd_verify->add_option("--out", verify_out, "report directory")->required();

  CLI::App* cmd_report =
      app.add_subcommand("report", "merge metrics and traces into one CSV");
  cmd_report->add_option("--metrics", report_metrics, "metrics JSON file(s)")
      ->required()
      ->take_all();
  cmd_report->add_option("--trace", report_trace, "training trace CSV");
  cmd_report->add_option("--out", report_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (cmd_generate->parsed()) {
      evident::run_generate(load(gen_args), gen_out);
    } else if (cmd_train->parsed()) {
      evident::run_train(load(train_args), train_data, train_out);
    } else if (cmd_eval->parsed()) {
      evident::run_eval(load(eval_args), eval_data, eval_checkpoint, eval_out);
    } else if (cmd_verify->parsed()) {
      evident::run_verify_bounds(verify_out);
      std::printf("certificates: all PASS (%s/certificates.json)\n",
                  verify_out.c_str());
    } else if (cmd_report->parsed()) {
      evident::run_report(report_metrics, report_trace, report_out);
    }
  } catch (const evident::CertificateViolation& e) {
    std::fprintf(stderr, "error: certificate violation: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
