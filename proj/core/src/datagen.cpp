#include "evident/datagen.hpp"

#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace evident {

namespace {

using nlohmann::json;

void validate(const GenConfig& c) {
  if (c.classes_per_subset < 1) throw std::invalid_argument("datagen: classes_per_subset must be >= 1");
  if (c.samples_train < 1 || c.samples_test < 2) {
    throw std::invalid_argument("datagen: need samples_train >= 1 and samples_test >= 2");
  }
  if (c.max_labels_per_actor < 1) throw std::invalid_argument("datagen: max_labels_per_actor must be >= 1");
  if (c.max_labels_per_actor > c.classes_per_subset) {
    throw std::invalid_argument(
        "datagen: max_labels_per_actor exceeds the classes available to an "
        "exclusive test subset");
  }
  if (c.noise_sigma < 0.0) throw std::invalid_argument("datagen: noise_sigma must be >= 0");
  if (c.bias_strength < 0.0 || c.bias_strength > 1.0) {
    throw std::invalid_argument("datagen: bias_strength must lie in [0,1]");
  }
  if (c.d_content < 1 || c.d_context < 1) {
    throw std::invalid_argument("datagen: feature blocks must be nonempty");
  }
}

Eigen::VectorXd random_unit(RandomStream& rng, int dim) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.normal();
  const double n = v.norm();
  return n > 0.0 ? Eigen::VectorXd(v / n) : Eigen::VectorXd::Unit(dim, 0);
}

// c distinct picks from pool (uniform, order irrelevant downstream)
std::vector<int> sample_without_replacement(RandomStream& rng,
                                            const std::vector<int>& pool,
                                            int count) {
  std::vector<int> candidates = pool;
  std::vector<int> picked;
  picked.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const std::size_t j = static_cast<std::size_t>(
        rng.uniform_int(candidates.size()));
    picked.push_back(candidates[j]);
    candidates[j] = candidates.back();
    candidates.pop_back();
  }
  return picked;
}

ActorSample make_sample(const GenConfig& cfg, const ClassMetadata& classes,
                        const std::vector<int>& label_pool, bool train_context,
                        int num_classes, RandomStream& rng) {
  const int cardinality =
      1 + static_cast<int>(rng.uniform_int(
              static_cast<std::uint64_t>(cfg.max_labels_per_actor)));
  const std::vector<int> labels =
      sample_without_replacement(rng, label_pool, cardinality);

  ActorSample s;
  s.labels = Eigen::VectorXd::Zero(num_classes);
  for (int k : labels) s.labels[k] = 1.0;

  Eigen::VectorXd content = Eigen::VectorXd::Zero(cfg.d_content);
  for (int k : labels) content += classes.content_prototypes.row(k).transpose();
  content /= static_cast<double>(labels.size());
  for (int i = 0; i < cfg.d_content; ++i) content[i] += cfg.noise_sigma * rng.normal();

  Eigen::VectorXd context(cfg.d_context);
  if (train_context && rng.uniform() < cfg.bias_strength) {
    // context encodes one of the actor's own classes
    const int k = labels[static_cast<std::size_t>(rng.uniform_int(labels.size()))];
    context = classes.context_prototypes.row(k).transpose();
    for (int i = 0; i < cfg.d_context; ++i) context[i] += cfg.noise_sigma * rng.normal();
  } else if (train_context) {
    for (int i = 0; i < cfg.d_context; ++i) context[i] = rng.normal();
  } else {
    // test: a random class prototype, independent of the labels
    const int k = static_cast<int>(rng.uniform_int(
        static_cast<std::uint64_t>(num_classes)));
    context = classes.context_prototypes.row(k).transpose();
    for (int i = 0; i < cfg.d_context; ++i) context[i] += cfg.noise_sigma * rng.normal();
  }

  s.features.resize(cfg.d_content + cfg.d_context);
  s.features << content, context;
  return s;
}

}  // namespace

std::vector<int> Dataset::context_columns() const {
  std::vector<int> cols(static_cast<std::size_t>(config.d_context));
  std::iota(cols.begin(), cols.end(), config.d_content);
  return cols;
}

Dataset generate_dataset(const GenConfig& config) {
  validate(config);
  const int C = config.classes_per_subset;
  const int num_classes = 3 * C;

  RandomStream root(config.seed);
  RandomStream proto_rng = root.split(0);
  RandomStream train_rng = root.split(1);
  RandomStream test_rng = root.split(2);

  Dataset ds;
  ds.config = config;
  for (int k = 0; k < C; ++k) ds.classes.z1.push_back(k);
  for (int k = C; k < 2 * C; ++k) ds.classes.z2.push_back(k);
  for (int k = 2 * C; k < 3 * C; ++k) ds.classes.z3.push_back(k);

  ds.classes.content_prototypes.resize(num_classes, config.d_content);
  for (int k = 0; k < num_classes; ++k) {
    ds.classes.content_prototypes.row(k) =
        random_unit(proto_rng, config.d_content).transpose();
  }
  // context prototypes: unit direction plus a per-class mean offset so the
  // class identity survives mean pooling
  ds.classes.context_prototypes.resize(num_classes, config.d_context);
  for (int k = 0; k < num_classes; ++k) {
    const double mu =
        num_classes > 1
            ? -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(num_classes - 1)
            : 0.0;
    ds.classes.context_prototypes.row(k) =
        (random_unit(proto_rng, config.d_context).array() + mu).transpose();
  }

  std::vector<int> known_pool;  // z1 and z2
  for (int k = 0; k < 2 * C; ++k) known_pool.push_back(k);

  ds.train.reserve(static_cast<std::size_t>(config.samples_train));
  for (int i = 0; i < config.samples_train; ++i) {
    ActorSample s = make_sample(config, ds.classes, known_pool,
                                /*train_context=*/true, num_classes, train_rng);
    s.split = "train";
    s.novelty = 0;
    ds.train.push_back(std::move(s));
  }

  const int n_novel = config.samples_test / 2;
  const int n_known = config.samples_test - n_novel;
  ds.test.reserve(static_cast<std::size_t>(config.samples_test));
  for (int i = 0; i < n_known; ++i) {
    ActorSample s = make_sample(config, ds.classes, ds.classes.z2,
                                /*train_context=*/false, num_classes, test_rng);
    s.split = "test";
    s.novelty = 0;
    ds.test.push_back(std::move(s));
  }
  for (int i = 0; i < n_novel; ++i) {
    ActorSample s = make_sample(config, ds.classes, ds.classes.z3,
                                /*train_context=*/false, num_classes, test_rng);
    s.split = "test";
    s.novelty = 1;
    ds.test.push_back(std::move(s));
  }
  return ds;
}

std::map<int, int> label_cardinality_histogram(const std::vector<ActorSample>& samples) {
  if (samples.empty()) {
    throw std::invalid_argument("label_cardinality_histogram: empty sample list");
  }
  std::map<int, int> hist;
  for (const ActorSample& s : samples) {
    hist[static_cast<int>(s.labels.sum())] += 1;
  }
  return hist;
}

namespace {

json config_to_json(const GenConfig& c) {
  return json{{"classes_per_subset", c.classes_per_subset},
              {"samples_train", c.samples_train},
              {"samples_test", c.samples_test},
              {"max_labels_per_actor", c.max_labels_per_actor},
              {"noise_sigma", c.noise_sigma},
              {"bias_strength", c.bias_strength},
              {"d_content", c.d_content},
              {"d_context", c.d_context},
              {"seed", c.seed}};
}

GenConfig config_from_json(const json& j) {
  GenConfig c;
  c.classes_per_subset = j.at("classes_per_subset").get<int>();
  c.samples_train = j.at("samples_train").get<int>();
  c.samples_test = j.at("samples_test").get<int>();
  c.max_labels_per_actor = j.at("max_labels_per_actor").get<int>();
  c.noise_sigma = j.at("noise_sigma").get<double>();
  c.bias_strength = j.at("bias_strength").get<double>();
  c.d_content = j.at("d_content").get<int>();
  c.d_context = j.at("d_context").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json sample_to_json(const ActorSample& s) {
  json rec;
  rec["features"] = std::vector<double>(s.features.data(),
                                        s.features.data() + s.features.size());
  std::vector<int> labels(static_cast<std::size_t>(s.labels.size()));
  for (Eigen::Index i = 0; i < s.labels.size(); ++i) {
    labels[static_cast<std::size_t>(i)] = static_cast<int>(s.labels[i]);
  }
  rec["labels"] = labels;
  rec["novelty"] = s.novelty;
  rec["split"] = s.split;
  return rec;
}

ActorSample sample_from_json(const json& rec) {
  ActorSample s;
  const auto feats = rec.at("features").get<std::vector<double>>();
  s.features = Eigen::Map<const Eigen::VectorXd>(feats.data(),
                                                 static_cast<Eigen::Index>(feats.size()));
  const auto labels = rec.at("labels").get<std::vector<int>>();
  s.labels.resize(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s.labels[static_cast<Eigen::Index>(i)] = static_cast<double>(labels[i]);
  }
  s.novelty = rec.at("novelty").get<int>();
  s.split = rec.at("split").get<std::string>();
  return s;
}

}  // namespace

void write_dataset(const std::string& jsonl_path, const std::string& meta_path,
                   const Dataset& dataset) {
  std::ofstream out(jsonl_path);
  if (!out) throw std::runtime_error("write_dataset: cannot open " + jsonl_path);
  for (const ActorSample& s : dataset.train) out << sample_to_json(s).dump() << '\n';
  for (const ActorSample& s : dataset.test) out << sample_to_json(s).dump() << '\n';

  json meta;
  meta["config"] = config_to_json(dataset.config);
  meta["z1"] = dataset.classes.z1;
  meta["z2"] = dataset.classes.z2;
  meta["z3"] = dataset.classes.z3;
  std::ofstream mout(meta_path);
  if (!mout) throw std::runtime_error("write_dataset: cannot open " + meta_path);
  mout << meta.dump(2) << '\n';
}

Dataset read_dataset(const std::string& jsonl_path, const std::string& meta_path) {
  std::ifstream min(meta_path);
  if (!min) throw std::runtime_error("read_dataset: cannot open " + meta_path);
  json meta = json::parse(min);

  Dataset ds;
  ds.config = config_from_json(meta.at("config"));
  ds.classes.z1 = meta.at("z1").get<std::vector<int>>();
  ds.classes.z2 = meta.at("z2").get<std::vector<int>>();
  ds.classes.z3 = meta.at("z3").get<std::vector<int>>();

  std::ifstream in(jsonl_path);
  if (!in) throw std::runtime_error("read_dataset: cannot open " + jsonl_path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ActorSample s = sample_from_json(json::parse(line));
    if (s.split == "train") {
      ds.train.push_back(std::move(s));
    } else {
      ds.test.push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace evident
