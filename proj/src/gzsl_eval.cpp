#include "gzsl/gzsl_eval.hpp"

#include "gzsl/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace gzsl {

nlohmann::json SplitSpec::to_json() const {
  return {{"seen", seen},
          {"unseen", unseen},
          {"split_seed", split_seed},
          {"train_fraction", train_fraction}};
}

SplitSpec SplitSpec::from_json(const nlohmann::json& j) {
  SplitSpec s;
  s.seen = j.at("seen").get<std::vector<std::string>>();
  s.unseen = j.at("unseen").get<std::vector<std::string>>();
  s.split_seed = j.at("split_seed").get<std::uint64_t>();
  s.train_fraction = j.at("train_fraction").get<double>();
  return s;
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t stage_seed(std::uint64_t split_seed, std::uint64_t stage) {
  return splitmix(split_seed ^ splitmix(stage + 1));
}

std::vector<SplitSpec> make_splits(const std::vector<std::string>& class_names, int n_splits,
                                   std::uint64_t seed, SplitSizes sizes, double train_fraction) {
  if (n_splits < 1) throw ConfigError("need at least one split");
  if (sizes.seen < 1 || sizes.unseen < 1) throw ConfigError("split sizes must be positive");
  if (std::size_t(sizes.seen + sizes.unseen) != class_names.size()) {
    throw ConfigError("split sizes " + std::to_string(sizes.seen) + "/" +
                      std::to_string(sizes.unseen) + " do not cover " +
                      std::to_string(class_names.size()) + " classes");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  std::set<std::string> distinct(class_names.begin(), class_names.end());
  if (distinct.size() != class_names.size()) throw ConfigError("duplicate class names");

  std::mt19937_64 rng(seed);
  std::vector<SplitSpec> splits;
  for (int s = 0; s < n_splits; ++s) {
    std::vector<std::size_t> idx(class_names.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<bool> unseen(class_names.size(), false);
    for (int k = 0; k < sizes.unseen; ++k) unseen[idx[std::size_t(k)]] = true;
    SplitSpec spec;
    for (std::size_t c = 0; c < class_names.size(); ++c) {
      (unseen[c] ? spec.unseen : spec.seen).push_back(class_names[c]);
    }
    spec.split_seed = rng();
    spec.train_fraction = train_fraction;
    splits.push_back(std::move(spec));
  }
  return splits;
}

Partition partition(const Dataset& dataset, const SplitSpec& split) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& label = dataset[i].label;
    if (!label) continue;
    by_class[*label].push_back(i);
  }
  std::vector<std::string> classes = split.seen;
  classes.insert(classes.end(), split.unseen.begin(), split.unseen.end());
  std::sort(classes.begin(), classes.end());
  std::mt19937_64 rng(stage_seed(split.split_seed, 0));
  Partition part;
  for (const auto& c : classes) {
    auto items = by_class[c];
    std::shuffle(items.begin(), items.end(), rng);
    const std::size_t n = items.size();
    std::size_t n_train = std::size_t(std::llround(split.train_fraction * double(n)));
    if (n >= 2) n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    part.train.insert(part.train.end(), items.begin(), items.begin() + long(n_train));
    part.test.insert(part.test.end(), items.begin() + long(n_train), items.end());
  }
  std::sort(part.train.begin(), part.train.end());
  std::sort(part.test.begin(), part.test.end());
  return part;
}

double harmonic_mean(double a, double b) {
  if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0)) {
    throw ContractError("accuracies must lie in [0, 1]");
  }
  if (a + b == 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

nlohmann::json SplitResult::to_json() const {
  nlohmann::json conf = nlohmann::json::array();
  for (Index r = 0; r < confusion.rows(); ++r) {
    std::vector<int> row(confusion.cols());
    for (Index c = 0; c < confusion.cols(); ++c) row[std::size_t(c)] = confusion(r, c);
    conf.push_back(row);
  }
  return {{"split", split.to_json()},
          {"seen_accuracy", seen_accuracy},
          {"unseen_accuracy", unseen_accuracy},
          {"harmonic_mean", harmonic},
          {"seen_total", seen_total},
          {"unseen_total", unseen_total},
          {"classes", classes},
          {"confusion", conf}};
}

std::pair<double, double> accuracies_from_confusion(const Eigen::MatrixXi& confusion,
                                                    const std::vector<bool>& unseen) {
  long hit[2] = {0, 0}, total[2] = {0, 0};
  for (Index r = 0; r < confusion.rows(); ++r) {
    const int g = unseen[std::size_t(r)] ? 1 : 0;
    hit[g] += confusion(r, r);
    total[g] += confusion.row(r).sum();
  }
  return {total[0] ? double(hit[0]) / double(total[0]) : 0.0,
          total[1] ? double(hit[1]) / double(total[1]) : 0.0};
}

SplitResult evaluate(std::span<const GestureFeature> test, const EmotionLexicon& lexicon,
                     const FeatureClassifier& classifier) {
  SplitResult res;
  res.classes = lexicon.words();
  const Index n = Index(lexicon.size());
  res.confusion = Eigen::MatrixXi::Zero(n, n);
  std::vector<bool> unseen(lexicon.size());
  for (std::size_t i = 0; i < lexicon.size(); ++i) unseen[i] = lexicon.is_unseen(i);
  for (const auto& item : test) {
    if (!lexicon.contains(item.label)) {
      throw ContractError("test item '" + item.id + "' has label '" + item.label +
                          "' outside the lexicon");
    }
    const std::size_t truth = lexicon.index_of(item.label);
    const std::string predicted = classifier(item.values);
    if (!lexicon.contains(predicted)) {
      throw ContractError("classifier returned '" + predicted + "', which is not in the lexicon");
    }
    ++res.confusion(Index(truth), Index(lexicon.index_of(predicted)));
    ++(unseen[truth] ? res.unseen_total : res.seen_total);
  }
  std::tie(res.seen_accuracy, res.unseen_accuracy) =
      accuracies_from_confusion(res.confusion, unseen);
  res.harmonic = harmonic_mean(res.seen_accuracy, res.unseen_accuracy);
  return res;
}

SplitResult evaluate(const ScAaeModel& model, std::span<const GestureFeature> test,
                     const EmotionLexicon& lexicon) {
  return evaluate(test, lexicon, [&](const Eigen::VectorXd& x) {
    return classify(model, x, lexicon, Restrict::kAll);
  });
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"fs_ger", fs_ger.to_json()},
          {"fs_train",
           {{"learning_rate", fs_train.adam.learning_rate},
            {"batch_size", fs_train.batch_size},
            {"max_epochs", fs_train.max_epochs},
            {"stop_at_perfect", fs_train.stop_at_perfect}}},
          {"aae",
           {{"gamma", aae.gamma},
            {"delta", aae.delta},
            {"epochs", aae.epochs},
            {"batch_size", aae.batch_size},
            {"latent_dim", aae.latent_dim},
            {"supervised_weight", aae.supervised_weight},
            {"autoencoder_lr", aae.autoencoder_lr},
            {"generator_lr", aae.generator_lr},
            {"discriminator_lr", aae.discriminator_lr}}},
          {"sc_aae", sc_aae.to_json()},
          {"frames", frames},
          {"n_splits", n_splits},
          {"seen", sizes.seen},
          {"unseen", sizes.unseen},
          {"train_fraction", train_fraction},
          {"seed", seed}};
}

void GzslReport::aggregate() {
  mean_seen = mean_unseen = mean_harmonic = 0.0;
  if (splits.empty()) return;
  for (const auto& s : splits) {
    mean_seen += s.seen_accuracy;
    mean_unseen += s.unseen_accuracy;
    mean_harmonic += s.harmonic;
  }
  const double n = double(splits.size());
  mean_seen /= n;
  mean_unseen /= n;
  mean_harmonic /= n;
}

std::string GzslReport::csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "split,seen_accuracy,unseen_accuracy,harmonic_mean,seen_total,unseen_total\n";
  for (std::size_t i = 0; i < splits.size(); ++i) {
    const auto& s = splits[i];
    out << i << ',' << s.seen_accuracy << ',' << s.unseen_accuracy << ',' << s.harmonic << ','
        << s.seen_total << ',' << s.unseen_total << '\n';
  }
  long seen_total = 0, unseen_total = 0;
  for (const auto& s : splits) {
    seen_total += s.seen_total;
    unseen_total += s.unseen_total;
  }
  out << "mean," << mean_seen << ',' << mean_unseen << ',' << mean_harmonic << ',' << seen_total
      << ',' << unseen_total << '\n';
  return out.str();
}

nlohmann::json GzslReport::manifest(const nlohmann::json& config) const {
  nlohmann::json splits_json = nlohmann::json::array();
  for (const auto& s : splits) splits_json.push_back(s.to_json());
  return {{"format", "gzsl-report"},
          {"version", 1},
          {"config_hash", config_hash},
          {"config", config},
          {"splits", splits_json},
          {"aggregate",
           {{"seen_accuracy", mean_seen},
            {"unseen_accuracy", mean_unseen},
            {"harmonic_mean", mean_harmonic}}}};
}

void check_report_manifest(const nlohmann::json& m) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw SchemaError("report manifest: " + what);
  };
  need(m.is_object(), "not an object");
  need(m.value("format", "") == "gzsl-report", "format is not gzsl-report");
  need(m.contains("config_hash") && m["config_hash"].is_string(), "missing config_hash");
  need(m.contains("splits") && m["splits"].is_array() && !m["splits"].empty(), "missing splits");
  need(m.contains("aggregate") && m["aggregate"].is_object(), "missing aggregate");
  double sum_h = 0.0;
  for (const auto& s : m["splits"]) {
    for (const char* key : {"seen_accuracy", "unseen_accuracy", "harmonic_mean"}) {
      need(s.contains(key) && s[key].is_number(), std::string("split lacks ") + key);
      const double v = s[key].get<double>();
      need(v >= 0.0 && v <= 1.0, std::string(key) + " outside [0, 1]");
    }
    need(s.contains("split") && s["split"].contains("seen") && s["split"].contains("unseen"),
         "split lacks its class lists");
    need(s.contains("classes") && s.contains("confusion"), "split lacks confusion counts");
    const double a = s["seen_accuracy"].get<double>();
    const double b = s["unseen_accuracy"].get<double>();
    need(std::abs(harmonic_mean(a, b) - s["harmonic_mean"].get<double>()) <= 1e-12,
         "harmonic mean does not match the accuracies");
    const auto classes = s["classes"].get<std::vector<std::string>>();
    const auto conf = s["confusion"].get<std::vector<std::vector<int>>>();
    need(conf.size() == classes.size(), "confusion matrix size");
    const auto unseen_words = s["split"]["unseen"].get<std::vector<std::string>>();
    Eigen::MatrixXi c(Index(classes.size()), Index(classes.size()));
    std::vector<bool> unseen(classes.size());
    for (std::size_t r = 0; r < classes.size(); ++r) {
      need(conf[r].size() == classes.size(), "confusion matrix size");
      for (std::size_t k = 0; k < classes.size(); ++k) c(Index(r), Index(k)) = conf[r][k];
      unseen[r] = std::find(unseen_words.begin(), unseen_words.end(), classes[r]) !=
                  unseen_words.end();
    }
    const auto [ra, rb] = accuracies_from_confusion(c, unseen);
    need(ra == a && rb == b, "accuracies do not match the confusion counts");
    sum_h += s["harmonic_mean"].get<double>();
  }
  const double mean_h = sum_h / double(m["splits"].size());
  need(std::abs(mean_h - m["aggregate"].value("harmonic_mean", -1.0)) <= 1e-12,
       "aggregate harmonic mean does not match the splits");
}

FeatureSets split_features(const Dataset& dataset, const Partition& part, const SplitSpec& split,
                           const std::vector<Eigen::VectorXd>& train_features,
                           const std::vector<Eigen::VectorXd>& test_features) {
  if (train_features.size() != part.train.size() || test_features.size() != part.test.size()) {
    throw ContractError("feature count does not match the partition");
  }
  auto is_seen = [&](const std::string& label) {
    return std::find(split.seen.begin(), split.seen.end(), label) != split.seen.end();
  };
  FeatureSets sets;
  for (std::size_t k = 0; k < part.train.size(); ++k) {
    const auto& seq = dataset[part.train[k]];
    if (!seq.label) continue;
    GestureFeature f{seq.id, train_features[k], *seq.label, false};
    if (is_seen(*seq.label)) {
      sets.seen_train.push_back(std::move(f));
    } else {
      f.label.clear();
      f.dummy = true;
      sets.unseen_train.push_back(std::move(f));
    }
  }
  for (std::size_t k = 0; k < part.test.size(); ++k) {
    const auto& seq = dataset[part.test[k]];
    if (!seq.label) continue;
    sets.test.push_back({seq.id, test_features[k], *seq.label, !is_seen(*seq.label)});
  }
  return sets;
}

EmotionLexicon split_lexicon(const EmotionLexicon& lexicon, const SplitSpec& split) {
  for (const auto* words : {&split.seen, &split.unseen}) {
    for (const auto& w : *words) {
      if (!lexicon.contains(w)) throw LookupError("lexicon lacks class '" + w + "'");
    }
  }
  return lexicon.with_unseen(split.unseen);
}

FsGerStage train_split_fs_ger(const Dataset& dataset, const SplitSpec& split,
                              const Partition& part, const ExperimentConfig& config) {
  FsGerConfig fs_config = config.fs_ger;
  fs_config.seen_classes = Index(split.seen.size());
  const std::uint64_t seed = stage_seed(split.split_seed, 1);
  FsGerStage stage{FsGerModel(fs_config, seed), {}, seed};
  const SupervisedSet train_set = make_supervised_set(dataset, part.train, split.seen, config.frames);
  FsGerTrainConfig fs_train = config.fs_train;
  fs_train.seed = stage_seed(split.split_seed, 2);
  stage.log = train_supervised(stage.model, train_set, fs_train);
  return stage;
}

FeatureSets extract_split_features(FsGerModel& model, const Dataset& dataset,
                                   const SplitSpec& split, const Partition& part, Index frames) {
  const auto train = extract_features(model, prepare_inputs(dataset, part.train, frames));
  const auto test = extract_features(model, prepare_inputs(dataset, part.test, frames));
  return split_features(dataset, part, split, train, test);
}

ScAaeStage train_split_sc_aae(const FeatureSets& sets, const EmotionLexicon& lexicon,
                              const SplitSpec& split, const ExperimentConfig& config) {
  ScAaeConfig aae_config = config.sc_aae;
  aae_config.feature_dim = config.fs_ger.feature_dim;
  aae_config.semantic_dim = lexicon.dim();
  aae_config.latent_dim = config.aae.latent_dim;
  const std::uint64_t seed = stage_seed(split.split_seed, 3);
  ScAaeStage stage{ScAaeModel(aae_config, seed), {}, seed};
  stage.log = train_sc_aae(stage.model, sets.seen_train, sets.unseen_train, lexicon, config.aae,
                           stage_seed(split.split_seed, 4));
  return stage;
}

SplitArtifacts run_split(const Dataset& dataset, const EmotionLexicon& lexicon,
                         const SplitSpec& split, const ExperimentConfig& config) {
  SplitArtifacts art;
  const EmotionLexicon lex = split_lexicon(lexicon, split);
  art.partition = partition(dataset, split);
  FsGerStage fs = train_split_fs_ger(dataset, split, art.partition, config);
  art.fs_log = fs.log;
  art.fs_checkpoint = fs.model.to_checkpoint(fs.seed);
  const FeatureSets sets =
      extract_split_features(fs.model, dataset, split, art.partition, config.frames);
  const ScAaeStage aae = train_split_sc_aae(sets, lex, split, config);
  art.aae_log = aae.log;
  art.aae_checkpoint = aae.model.to_checkpoint(aae.seed);
  art.result = evaluate(aae.model, sets.test, lex);
  art.result.split = split;
  return art;
}

std::string hash_text(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_report(const std::filesystem::path& dir, const GzslReport& report,
                  const ExperimentConfig& config) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "report.csv");
  csv << report.csv();
  std::ofstream json(dir / "report.json");
  json << report.manifest(config.to_json()).dump(2) << '\n';
  if (!csv || !json) throw IoError("cannot write report to " + dir.string());
}

GzslReport run_experiment(const Dataset& dataset, const EmotionLexicon& lexicon,
                          const ExperimentConfig& config, int jobs,
                          const std::optional<std::filesystem::path>& out_dir,
                          const std::string& config_hash) {
  const auto splits = make_splits(dataset.class_names(), config.n_splits, config.seed,
                                  config.sizes, config.train_fraction);
  std::vector<SplitArtifacts> results(splits.size());
  std::vector<std::exception_ptr> errors(splits.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < splits.size(); i = next++) {
      try {
        results[i] = run_split(dataset, lexicon, splits[i], config);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(jobs, 1, int(splits.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  GzslReport report;
  for (const auto& r : results) report.splits.push_back(r.result);
  report.aggregate();
  report.config_hash = config_hash.empty() ? hash_text(config.to_json().dump()) : config_hash;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    for (std::size_t i = 0; i < results.size(); ++i) {
      const std::string tag = "split" + std::to_string(i);
      save_checkpoint(*out_dir / (tag + "_fsger.ckpt"), *results[i].fs_checkpoint);
      save_checkpoint(*out_dir / (tag + "_scaae.ckpt"), *results[i].aae_checkpoint);
      results[i].fs_log.write_csv(*out_dir / (tag + "_fsger_log.csv"));
      results[i].aae_log.write_csv(*out_dir / (tag + "_scaae_log.csv"));
    }
    write_report(*out_dir, report, config);
  }
  return report;
}

}  // namespace gzsl
