#include "evident/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "evident/hsic.hpp"
#include "evident/opinion.hpp"

namespace evident {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kLimitTol = 1e-3;      // asymptotic targets for the suite
constexpr int kLimitStep = 1000;        // checked at this iteration

json config_to_json_obj(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["data"] = {{"classes_per_subset", c.data.classes_per_subset},
               {"samples_train", c.data.samples_train},
               {"samples_test", c.data.samples_test},
               {"max_labels_per_actor", c.data.max_labels_per_actor},
               {"noise_sigma", c.data.noise_sigma},
               {"bias_strength", c.data.bias_strength},
               {"d_content", c.data.d_content},
               {"d_context", c.data.d_context},
               {"seed", c.data.seed}};
  j["model"] = {
      {"d_in", c.model.d_in},
      {"hidden", c.model.hidden},
      {"K", c.model.K},
      {"evidence", c.model.evidence == EvidenceMode::Softplus ? "softplus" : "relu"}};
  j["optimizer"] = {
      {"epochs", c.optimizer.epochs},
      {"batch_size", c.optimizer.batch_size},
      {"eta1", c.optimizer.eta1},
      {"eta2", c.optimizer.eta2},
      {"delta", c.optimizer.delta},
      {"gamma", c.optimizer.gamma},
      {"debias", c.optimizer.debias},
      {"reset", c.optimizer.reset == ResetMode::ResetToAverage},
      {"averaging",
       c.optimizer.averaging == AveragingMode::ProperMean ? "proper" : "lagged"}};
  j["eval"] = {{"mechanisms", c.mechanisms}};
  return j;
}

void validate_config(const ExperimentConfig& c) {
  if (c.model.d_in != c.data.d_content + c.data.d_context) {
    throw std::invalid_argument(
        "config: model.d_in must equal data.d_content + data.d_context");
  }
  if (c.model.K != 2 * c.data.classes_per_subset) {
    throw std::invalid_argument(
        "config: model.K must equal twice data.classes_per_subset (the known classes)");
  }
  if (c.model.K < 1) throw std::invalid_argument("config: model.K must be >= 1");
  if (c.optimizer.epochs < 1 || c.optimizer.batch_size < 2) {
    throw std::invalid_argument("config: need epochs >= 1 and batch_size >= 2");
  }
  if (!(c.optimizer.eta1 > 0.0) || c.optimizer.eta2 < 0.0 ||
      c.optimizer.delta < 0.0 || c.optimizer.gamma < 0.0) {
    throw std::invalid_argument("config: bad optimizer rates");
  }
  if (c.mechanisms.empty()) {
    throw std::invalid_argument("config: eval.mechanisms must be nonempty");
  }
  const std::set<std::string> known = {"pe", "ne", "pne", "belief"};
  for (const std::string& m : c.mechanisms) {
    if (!known.count(m)) {
      throw std::invalid_argument("config: unknown mechanism '" + m + "'");
    }
  }
}

ExperimentConfig config_from_json_obj(const json& j) {
  ExperimentConfig c = ExperimentConfig{};
  c.seed = j.at("seed").get<std::uint64_t>();

  const json& d = j.at("data");
  c.data.classes_per_subset = d.at("classes_per_subset").get<int>();
  c.data.samples_train = d.at("samples_train").get<int>();
  c.data.samples_test = d.at("samples_test").get<int>();
  c.data.max_labels_per_actor = d.at("max_labels_per_actor").get<int>();
  c.data.noise_sigma = d.at("noise_sigma").get<double>();
  c.data.bias_strength = d.at("bias_strength").get<double>();
  c.data.d_content = d.at("d_content").get<int>();
  c.data.d_context = d.at("d_context").get<int>();
  c.data.seed = d.contains("seed") ? d.at("seed").get<std::uint64_t>() : c.seed;

  const json& m = j.at("model");
  c.model.d_in = m.at("d_in").get<int>();
  c.model.hidden = m.at("hidden").get<std::vector<int>>();
  c.model.K = m.at("K").get<int>();
  const std::string ev = m.at("evidence").get<std::string>();
  if (ev != "softplus" && ev != "relu") {
    throw std::invalid_argument("config: model.evidence must be softplus or relu");
  }
  c.model.evidence = ev == "relu" ? EvidenceMode::Relu : EvidenceMode::Softplus;

  const json& o = j.at("optimizer");
  c.optimizer.epochs = o.at("epochs").get<int>();
  c.optimizer.batch_size = o.at("batch_size").get<int>();
  c.optimizer.eta1 = o.at("eta1").get<double>();
  c.optimizer.eta2 = o.at("eta2").get<double>();
  c.optimizer.delta = o.at("delta").get<double>();
  c.optimizer.gamma = o.at("gamma").get<double>();
  c.optimizer.debias = o.at("debias").get<bool>();
  c.optimizer.reset = o.at("reset").get<bool>() ? ResetMode::ResetToAverage
                                                : ResetMode::NoReset;
  const std::string avg = o.at("averaging").get<std::string>();
  if (avg != "proper" && avg != "lagged") {
    throw std::invalid_argument("config: optimizer.averaging must be proper or lagged");
  }
  c.optimizer.averaging =
      avg == "proper" ? AveragingMode::ProperMean : AveragingMode::LaggedSum;

  c.mechanisms = j.at("eval").at("mechanisms").get<std::vector<std::string>>();
  validate_config(c);
  return c;
}

void deep_merge(json& base, const json& overlay) {
  if (!overlay.is_object() || !base.is_object()) {
    base = overlay;
    return;
  }
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    if (base.contains(it.key())) {
      deep_merge(base[it.key()], it.value());
    } else {
      base[it.key()] = it.value();
    }
  }
}

void apply_override(json& root, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override must look like path.to.field=value: " +
                                assignment);
  }
  const std::string path = assignment.substr(0, eq);
  const std::string value_text = assignment.substr(eq + 1);

  json value;
  try {
    value = json::parse(value_text);
  } catch (const json::parse_error&) {
    value = value_text;  // bare string
  }

  json* cursor = &root;
  std::stringstream ss(path);
  std::string key, next;
  std::getline(ss, key, '.');
  while (std::getline(ss, next, '.')) {
    cursor = &(*cursor)[key];
    key = next;
  }
  (*cursor)[key] = value;
}

}  // namespace

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  validate_config(c);
  return c;
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
  return config_to_json_obj(config).dump(2);
}

ExperimentConfig load_experiment_config(const std::string& path,
                                        const std::vector<std::string>& overrides) {
  json doc = config_to_json_obj(ExperimentConfig{});
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config file not found: " + path);
    json user;
    try {
      user = json::parse(in);
    } catch (const json::parse_error& e) {
      throw std::invalid_argument("config parse error in " + path + ": " + e.what());
    }
    // a bare top-level seed re-seeds data generation too unless overridden
    if (user.contains("seed") &&
        !(user.contains("data") && user["data"].contains("seed"))) {
      doc["data"].erase("seed");
    }
    deep_merge(doc, user);
  }
  bool top_seed_override = false, data_seed_override = false;
  for (const std::string& o : overrides) {
    if (o.rfind("seed=", 0) == 0) top_seed_override = true;
    if (o.rfind("data.seed=", 0) == 0) data_seed_override = true;
    apply_override(doc, o);
  }
  if (top_seed_override && !data_seed_override) doc["data"]["seed"] = doc["seed"];
  if (!doc["data"].contains("seed")) doc["data"]["seed"] = doc["seed"];
  try {
    return config_from_json_obj(doc);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

EvalReport evaluate(const ExperimentConfig& config, const Dataset& dataset,
                    const NetworkParams& params, const ModelConfig& model) {
  const int n = static_cast<int>(dataset.test.size());
  if (n < 2) throw std::invalid_argument("evaluate: test set too small");
  const int K = model.K;

  Eigen::MatrixXd X(n, model.d_in);
  std::vector<int> novelty(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const ActorSample& s = dataset.test[static_cast<std::size_t>(i)];
    X.row(i) = s.features.transpose();
    novelty[static_cast<std::size_t>(i)] = s.novelty;
  }

  const ForwardResult fwd = forward(params, model, X, dataset.context_columns());

  std::vector<double> pe(static_cast<std::size_t>(n)), ne(static_cast<std::size_t>(n)),
      pne(static_cast<std::size_t>(n)), belief(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    EvidencePair ev;
    ev.alpha = fwd.alpha.row(i).transpose();
    ev.beta = fwd.beta.row(i).transpose();
    const NoveltyScores s = novelty_scores(ev);
    pe[static_cast<std::size_t>(i)] = s.pe;
    ne[static_cast<std::size_t>(i)] = s.ne;
    pne[static_cast<std::size_t>(i)] = s.pne;
    belief[static_cast<std::size_t>(i)] = s.belief;
  }

  EvalReport report;
  for (const std::string& mech : config.mechanisms) {
    const std::vector<double>* scores = nullptr;
    if (mech == "pe") scores = &pe;
    else if (mech == "ne") scores = &ne;
    else if (mech == "pne") scores = &pne;
    else if (mech == "belief") scores = &belief;
    else throw std::invalid_argument("evaluate: unknown mechanism " + mech);
    report.mechanisms.emplace_back(mech,
                                   binary_curve_metrics({*scores, novelty}));
  }

  // closed-set ranking quality on the known test actors
  const int n_known = static_cast<int>(
      std::count(novelty.begin(), novelty.end(), 0));
  if (n_known > 0) {
    Eigen::MatrixXd prob(n_known, K);
    Eigen::MatrixXd truth(n_known, K);
    int r = 0;
    for (int i = 0; i < n; ++i) {
      if (novelty[static_cast<std::size_t>(i)] != 0) continue;
      for (int k = 0; k < K; ++k) {
        prob(r, k) = fwd.alpha(i, k) / (fwd.alpha(i, k) + fwd.beta(i, k));
        truth(r, k) = dataset.test[static_cast<std::size_t>(i)].labels[k];
      }
      r += 1;
    }
    const MeanApResult map_result = mean_ap(prob, truth);
    report.closed_set_map = map_result.map;
    report.skipped_classes = map_result.skipped_classes;
  }

  report.hsic_test = hsic(fwd.z, fwd.pooled_context);
  return report;
}

std::string dataset_jsonl_path(const std::string& dir) {
  return (fs::path(dir) / "dataset.jsonl").string();
}
std::string dataset_meta_path(const std::string& dir) {
  return (fs::path(dir) / "dataset.meta.json").string();
}
std::string checkpoint_path(const std::string& dir) {
  return (fs::path(dir) / "checkpoint.json").string();
}
std::string train_trace_path(const std::string& dir) {
  return (fs::path(dir) / "train_trace.csv").string();
}

namespace {

void attach_echo(const std::string& path, const ExperimentConfig& config) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("attach_echo: cannot reopen " + path);
  json j = json::parse(in);
  in.close();
  j["experiment_config"] = config_to_json_obj(config);
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

}  // namespace

void run_generate(const ExperimentConfig& config, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const Dataset ds = generate_dataset(config.data);
  write_dataset(dataset_jsonl_path(out_dir), dataset_meta_path(out_dir), ds);
  attach_echo(dataset_meta_path(out_dir), config);
}

void run_train(const ExperimentConfig& config, const std::string& data_dir,
               const std::string& out_dir) {
  fs::create_directories(out_dir);
  const Dataset ds =
      read_dataset(dataset_jsonl_path(data_dir), dataset_meta_path(data_dir));
  RandomStream rng = RandomStream(config.seed).split(3);
  const TrainResult result = train(config.model, config.optimizer, ds, rng);
  save_checkpoint(checkpoint_path(out_dir), result.params, config.model);
  attach_echo(checkpoint_path(out_dir), config);
  write_train_trace_csv(train_trace_path(out_dir), result.trace,
                        config_to_json_obj(config).dump());
}

void run_eval(const ExperimentConfig& config, const std::string& data_dir,
              const std::string& checkpoint, const std::string& out_path) {
  const Dataset ds =
      read_dataset(dataset_jsonl_path(data_dir), dataset_meta_path(data_dir));
  auto [params, model] = load_checkpoint(checkpoint);
  const EvalReport report = evaluate(config, ds, params, model);

  json j;
  j["experiment_config"] = config_to_json_obj(config);
  j["seed"] = config.seed;
  json mechs;
  for (const auto& [name, m] : report.mechanisms) {
    mechs[name] = {{"auroc", m.auroc},
                   {"aupr", m.aupr},
                   {"fpr_at_95tpr", m.fpr_at_95tpr},
                   {"detection_error", m.detection_error},
                   {"realized_tpr", m.realized_tpr},
                   {"threshold", m.threshold}};
  }
  j["mechanisms"] = mechs;
  j["closed_set_map"] = report.closed_set_map;
  j["skipped_classes"] = report.skipped_classes;
  j["hsic_test"] = report.hsic_test;

  if (out_path.find('/') != std::string::npos) {
    fs::create_directories(fs::path(out_path).parent_path());
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("run_eval: cannot open " + out_path);
  out << j.dump(2) << '\n';
}

void run_verify_bounds(const std::string& out_dir) {
  fs::create_directories(out_dir);
  json problems = json::array();
  bool all_pass = true;
  std::string first_failure;

  for (const SuiteEntry& entry : builtin_certification_suite()) {
    const TraceReport trace = run_constrained(entry.problem, entry.config);
    const Prop1Report p1 = check_prop1(trace, entry.problem.G);
    const Prop2Report p2 = check_prop2_bounds(trace, entry.problem);

    double g_at_limit = 0.0, ratio_at_limit = 0.0;
    bool limits_pass = false;
    if (static_cast<int>(trace.rows.size()) > kLimitStep) {
      const TraceRow& row = trace.rows[static_cast<std::size_t>(kLimitStep)];
      g_at_limit = std::max(row.constraint_avg, 0.0);
      ratio_at_limit = row.lambda / (static_cast<double>(kLimitStep) * trace.eta2);
      limits_pass = g_at_limit <= kLimitTol && ratio_at_limit <= kLimitTol;
    }

    write_trace_csv(
        (fs::path(out_dir) / ("trace_" + entry.problem.name + ".csv")).string(),
        trace, entry.problem,
        "problem=" + entry.problem.name +
            " eta2=" + std::to_string(entry.config.eta2) +
            " delta=" + std::to_string(entry.config.delta) +
            " lambda0=" + std::to_string(entry.config.lambda0) +
            " steps=" + std::to_string(entry.config.max_steps));

    const bool pass = p1.ok && p2.ok && limits_pass;
    if (!pass && all_pass) {
      all_pass = false;
      first_failure = entry.problem.name;
    }
    problems.push_back(
        {{"name", entry.problem.name},
         {"steps", entry.config.max_steps},
         {"config",
          {{"eta2", entry.config.eta2},
           {"delta", entry.config.delta},
           {"lambda0", entry.config.lambda0},
           {"gamma", entry.config.gamma}}},
         {"averaging_certificate",
          {{"pass", p1.ok},
           {"max_recurrence_residual", p1.max_recurrence_residual},
           {"max_bound_slack", p1.max_bound_slack}}},
         {"bound_certificates",
          {{"pass", p2.ok},
           {"first_violation_step", p2.first_violation_step},
           {"final_constraint", p2.final_constraint},
           {"final_dual_ratio", p2.final_bound1_rhs}}},
         {"limits",
          {{"pass", limits_pass},
           {"constraint_at_checkpoint", g_at_limit},
           {"dual_ratio_at_checkpoint", ratio_at_limit},
           {"tolerance", kLimitTol}}},
         {"pass", pass}});
  }

  json report;
  report["problems"] = problems;
  report["all_pass"] = all_pass;
  std::ofstream out((fs::path(out_dir) / "certificates.json").string());
  out << report.dump(2) << '\n';

  if (!all_pass) {
    throw CertificateViolation("certificate failure on problem " + first_failure +
                               "; see " + out_dir + "/certificates.json");
  }
}

void run_report(const std::vector<std::string>& metrics_paths,
                const std::string& trace_csv_path, const std::string& out_path) {
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("run_report: cannot open " + out_path);
  out << "source,row,detection_error,auroc,aupr,fpr_at_95tpr\n";
  char buf[360];

  for (const std::string& path : metrics_paths) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("run_report: metrics file not found: " + path);
    const json j = json::parse(in);
    const std::string stem = fs::path(path).stem().string();
    for (auto it = j.at("mechanisms").begin(); it != j.at("mechanisms").end(); ++it) {
      const json& m = it.value();
      std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%.17g,%.17g\n",
                    stem.c_str(), it.key().c_str(),
                    m.at("detection_error").get<double>(),
                    m.at("auroc").get<double>(), m.at("aupr").get<double>(),
                    m.at("fpr_at_95tpr").get<double>());
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), "%s,closed_set_map,%.17g,,,\n", stem.c_str(),
                  j.at("closed_set_map").get<double>());
    out << buf;
    std::snprintf(buf, sizeof(buf), "%s,hsic_test,%.17g,,,\n", stem.c_str(),
                  j.at("hsic_test").get<double>());
    out << buf;
  }

  if (!trace_csv_path.empty()) {
    std::ifstream in(trace_csv_path);
    if (!in) throw std::invalid_argument("run_report: trace not found: " + trace_csv_path);
    const std::string stem = fs::path(trace_csv_path).stem().string();
    std::string line, last;
    std::getline(in, line);  // comment or header
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] != '#' && line.find(',') != std::string::npos &&
          line.substr(0, 4) != "step") {
        last = line;
      }
    }
    if (!last.empty()) {
      double loss = 0, hval = 0, lambda = 0;
      int step = 0;
      if (std::sscanf(last.c_str(), "%d,%lf,%lf,%lf", &step, &loss, &hval,
                      &lambda) == 4) {
        std::snprintf(buf, sizeof(buf), "%s,final_loss,%.17g,,,\n", stem.c_str(), loss);
        out << buf;
        std::snprintf(buf, sizeof(buf), "%s,final_hsic,%.17g,,,\n", stem.c_str(), hval);
        out << buf;
        std::snprintf(buf, sizeof(buf), "%s,final_lambda,%.17g,,,\n", stem.c_str(), lambda);
        out << buf;
      }
    }
  }
}

}  // namespace evident
