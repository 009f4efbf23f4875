#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "evident/random.hpp"

namespace evident {

// One synthetic actor: content features carry the action signal, a trailing
// context block carries a class-correlated bias with strength rho in train
// (decorrelated from labels in test).
struct ActorSample {
  Eigen::VectorXd features;  // [content | context]
  Eigen::VectorXd labels;    // multi-hot over all generated classes
  int novelty = 0;           // 1 iff labels fall exclusively in the unseen subset
  std::string split;         // "train" | "test"
};

struct GenConfig {
  int classes_per_subset = 3;    // classes in each of the three disjoint subsets
  int samples_train = 4000;
  int samples_test = 1000;
  int max_labels_per_actor = 2;  // label cardinality uniform on {1..max}
  double noise_sigma = 0.06;
  double bias_strength = 0.9;    // probability a train context encodes its class
  int d_content = 24;
  int d_context = 8;
  std::uint64_t seed = 1;
};

// Class index subsets: train draws labels from z1 and z2; test actors carry
// labels exclusively in z2 (known, novelty 0) or exclusively in z3 (novelty 1).
struct ClassMetadata {
  std::vector<int> z1, z2, z3;
  Eigen::MatrixXd content_prototypes;  // num_classes x d_content, unit rows
  Eigen::MatrixXd context_prototypes;  // num_classes x d_context
};

struct Dataset {
  std::vector<ActorSample> train;
  std::vector<ActorSample> test;
  ClassMetadata classes;
  GenConfig config;  // echo

  int num_classes() const { return 3 * config.classes_per_subset; }
  int num_known_classes() const { return 2 * config.classes_per_subset; }
  int d_in() const { return config.d_content + config.d_context; }
  // Column indices of the context block (the pooled side of the constraint).
  std::vector<int> context_columns() const;
};

// Deterministic given config.seed. Throws std::invalid_argument on an
// impossible config (e.g. max_labels_per_actor > classes_per_subset).
Dataset generate_dataset(const GenConfig& config);

// Actor count per label cardinality; values sum to samples.size().
std::map<int, int> label_cardinality_histogram(const std::vector<ActorSample>& samples);

// JSON-lines dataset + metadata sidecar (class subsets and config echo).
void write_dataset(const std::string& jsonl_path, const std::string& meta_path,
                   const Dataset& dataset);

// Rebuilds a Dataset from files written by write_dataset. Prototype matrices
// are not persisted and come back empty.
Dataset read_dataset(const std::string& jsonl_path, const std::string& meta_path);

}  // namespace evident
