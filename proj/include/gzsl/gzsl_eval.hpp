#pragma once

#include "gzsl/fs_ger.hpp"
#include "gzsl/lexicon.hpp"
#include "gzsl/sc_aae.hpp"
#include "gzsl/skeleton.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gzsl {

struct SplitSizes {
  int seen = 6;
  int unseen = 5;
};

struct SplitSpec {
  std::vector<std::string> seen;
  std::vector<std::string> unseen;
  std::uint64_t split_seed = 0;
  double train_fraction = 0.8;

  nlohmann::json to_json() const;
  static SplitSpec from_json(const nlohmann::json& j);
};

/// n_splits random seen/unseen partitions of the class list. Unseen classes
/// are drawn without replacement; seen classes keep their class-list order.
/// Throws ConfigError unless sizes add up to the number of classes.
std::vector<SplitSpec> make_splits(const std::vector<std::string>& class_names, int n_splits,
                                   std::uint64_t seed, SplitSizes sizes = {},
                                   double train_fraction = 0.8);

struct Partition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Per-class shuffle and cut; every class with at least two sequences keeps
// one of them on each side.
Partition partition(const Dataset& dataset, const SplitSpec& split);

// 2ab / (a + b), with H(0, 0) = 0.
double harmonic_mean(double acc_seen, double acc_unseen);

struct SplitResult {
  SplitSpec split;
  double seen_accuracy = 0.0;
  double unseen_accuracy = 0.0;
  double harmonic = 0.0;
  long seen_total = 0;
  long unseen_total = 0;
  // Rows: true class, columns: predicted class, both in lexicon order.
  std::vector<std::string> classes;
  Eigen::MatrixXi confusion;

  nlohmann::json to_json() const;
};

// Accuracies recomputed from confusion counts.
std::pair<double, double> accuracies_from_confusion(const Eigen::MatrixXi& confusion,
                                                    const std::vector<bool>& unseen);

using FeatureClassifier = std::function<std::string(const Eigen::VectorXd&)>;

/// Scores every labelled test feature. The lexicon's unseen flags decide
/// which accuracy an item counts towards. Throws ContractError for a test
/// label missing from the lexicon.
SplitResult evaluate(std::span<const GestureFeature> test, const EmotionLexicon& lexicon,
                     const FeatureClassifier& classifier);

// Classifies with the SC-AAE over every lexicon entry.
SplitResult evaluate(const ScAaeModel& model, std::span<const GestureFeature> test,
                     const EmotionLexicon& lexicon);

struct ExperimentConfig {
  FsGerConfig fs_ger;
  FsGerTrainConfig fs_train;
  AaeHyperParams aae;
  ScAaeConfig sc_aae;
  Index frames = 60;
  int n_splits = 5;
  SplitSizes sizes;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

struct GzslReport {
  std::vector<SplitResult> splits;
  double mean_seen = 0.0;
  double mean_unseen = 0.0;
  double mean_harmonic = 0.0;
  std::string config_hash;

  void aggregate();
  std::string csv() const;
  nlohmann::json manifest(const nlohmann::json& config) const;
};

// Validates a manifest produced by GzslReport::manifest. Throws SchemaError.
void check_report_manifest(const nlohmann::json& manifest);

// Everything one split produces on the way to its report row.
struct SplitArtifacts {
  Partition partition;
  FsGerTrainingLog fs_log;
  AaeTrainingLog aae_log;
  std::optional<Checkpoint> fs_checkpoint;
  std::optional<Checkpoint> aae_checkpoint;
  SplitResult result;
};

// Seed of one training stage within a split.
std::uint64_t stage_seed(std::uint64_t split_seed, std::uint64_t stage);

// Builds the feature lists for SC-AAE training and testing from extracted
// features: seen training items carry labels, unseen training items are
// unlabeled, test items all keep their labels.
struct FeatureSets {
  std::vector<GestureFeature> seen_train;
  std::vector<GestureFeature> unseen_train;
  std::vector<GestureFeature> test;
};
FeatureSets split_features(const Dataset& dataset, const Partition& part, const SplitSpec& split,
                           const std::vector<Eigen::VectorXd>& train_features,
                           const std::vector<Eigen::VectorXd>& test_features);

struct FsGerStage {
  FsGerModel model;
  FsGerTrainingLog log;
  std::uint64_t seed = 0;
};

// FS-GER trained on the split's seen classes plus the dummy class.
FsGerStage train_split_fs_ger(const Dataset& dataset, const SplitSpec& split,
                              const Partition& part, const ExperimentConfig& config);

FeatureSets extract_split_features(FsGerModel& model, const Dataset& dataset,
                                   const SplitSpec& split, const Partition& part, Index frames);

struct ScAaeStage {
  ScAaeModel model;
  AaeTrainingLog log;
  std::uint64_t seed = 0;
};

// The lexicon must already mark the split's unseen words.
ScAaeStage train_split_sc_aae(const FeatureSets& sets, const EmotionLexicon& split_lexicon,
                              const SplitSpec& split, const ExperimentConfig& config);

// Checks that the lexicon covers the split and marks its unseen words.
EmotionLexicon split_lexicon(const EmotionLexicon& lexicon, const SplitSpec& split);

/// FS-GER, feature extraction, SC-AAE and evaluation for one split.
SplitArtifacts run_split(const Dataset& dataset, const EmotionLexicon& lexicon,
                         const SplitSpec& split, const ExperimentConfig& config);

// 16 hex digits of the 64-bit FNV-1a hash of text.
std::string hash_text(std::string_view text);

/// Runs every split, jobs at a time, and aggregates. When out_dir is given,
/// per-split checkpoints and logs plus report.csv and report.json are
/// written there. An empty config_hash is replaced by the hash of the
/// experiment config.
GzslReport run_experiment(const Dataset& dataset, const EmotionLexicon& lexicon,
                          const ExperimentConfig& config, int jobs = 1,
                          const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                          const std::string& config_hash = "");

// Writes report.csv and report.json into dir.
void write_report(const std::filesystem::path& dir, const GzslReport& report,
                  const ExperimentConfig& config);

}  // namespace gzsl
