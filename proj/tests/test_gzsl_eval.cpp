#include "gzsl/errors.hpp"
#include "gzsl/gzsl_eval.hpp"
#include "gzsl/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

using namespace gzsl;

namespace {

std::vector<std::string> eleven() { return default_emotion_words(11); }

EmotionLexicon lexicon_for(const std::vector<std::string>& words, const std::vector<std::string>& unseen) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Identity(Eigen::Index(words.size()), Eigen::Index(words.size()));
  return EmotionLexicon(words, e).with_unseen(unseen);
}

std::vector<GestureFeature> labelled_items(const std::vector<std::string>& words, int per_class) {
  std::vector<GestureFeature> out;
  for (std::size_t c = 0; c < words.size(); ++c)
    for (int i = 0; i < per_class; ++i) {
      GestureFeature f;
      f.id = words[c] + std::to_string(i);
      f.values = Eigen::VectorXd::Unit(Eigen::Index(words.size()), Eigen::Index(c));
      f.label = words[c];
      out.push_back(f);
    }
  return out;
}

ExperimentConfig tiny_experiment() {
  ExperimentConfig c;
  c.fs_ger.channels = {4, 8, 8};
  c.fs_ger.kernel = 3;
  c.fs_ger.projection = 8;
  c.fs_ger.hidden = 8;
  c.fs_ger.feature_dim = 6;
  c.fs_train.max_epochs = 2;
  c.aae.epochs = 3;
  c.aae.latent_dim = 3;
  c.sc_aae.hidden = 8;
  c.sc_aae.language_hidden = {8, 8};
  c.sc_aae.feature_hidden = {8, 4};
  c.frames = 16;
  c.n_splits = 2;
  c.sizes = {3, 2};
  c.seed = 21;
  return c;
}

}  // namespace

TEST(HarmonicMean, Examples) {
  EXPECT_EQ(harmonic_mean(0.5, 0.5), 0.5);
  EXPECT_EQ(harmonic_mean(1.0, 0.0), 0.0);
  EXPECT_EQ(harmonic_mean(0.0, 0.0), 0.0);
  EXPECT_NEAR(harmonic_mean(0.7, 0.5), 0.583333333333333, 1e-12);
  EXPECT_NEAR(harmonic_mean(0.7, 0.5), 7.0 / 12.0, 1e-15);
  EXPECT_THROW(harmonic_mean(1.1, 0.5), ContractError);
  EXPECT_THROW(harmonic_mean(0.5, -0.1), ContractError);
  EXPECT_THROW(harmonic_mean(std::nan(""), 0.5), ContractError);
}

TEST(HarmonicMean, PropertiesOnRandomPairs) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = u(rng), b = u(rng);
    const double h = harmonic_mean(a, b);
    EXPECT_EQ(h, harmonic_mean(b, a));
    EXPECT_LE(h, 2.0 * std::min(a, b) + 1e-15);
    EXPECT_LE(h, 0.5 * (a + b) + 1e-15);
    EXPECT_GE(h, 0.0);
  }
}

TEST(Splits, DeterministicPartitionOfClasses) {
  const auto words = eleven();
  const auto s1 = make_splits(words, 5, 42);
  const auto s2 = make_splits(words, 5, 42);
  ASSERT_EQ(s1.size(), 5u);
  for (std::size_t i = 0; i < s1.size(); ++i) {
    EXPECT_EQ(s1[i].seen, s2[i].seen);
    EXPECT_EQ(s1[i].unseen, s2[i].unseen);
    EXPECT_EQ(s1[i].split_seed, s2[i].split_seed);
    EXPECT_EQ(s1[i].seen.size(), 6u);
    EXPECT_EQ(s1[i].unseen.size(), 5u);
    std::multiset<std::string> all(s1[i].seen.begin(), s1[i].seen.end());
    all.insert(s1[i].unseen.begin(), s1[i].unseen.end());
    EXPECT_EQ(all, std::multiset<std::string>(words.begin(), words.end()));
    const SplitSpec back = SplitSpec::from_json(s1[i].to_json());
    EXPECT_EQ(back.seen, s1[i].seen);
    EXPECT_EQ(back.split_seed, s1[i].split_seed);
  }
  EXPECT_THROW(make_splits(words, 1, 1, {6, 6}), ConfigError);
  EXPECT_THROW(make_splits({"a", "b"}, 1, 1), ConfigError);
}

TEST(Splits, UnseenFrequencyIsBinomial) {
  const auto words = eleven();
  const auto splits = make_splits(words, 1000, 7);
  std::map<std::string, int> count;
  for (const auto& s : splits)
    for (const auto& w : s.unseen) ++count[w];
  const double p = 5.0 / 11.0, n = 1000.0;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (const auto& w : words) {
    EXPECT_LT(std::abs(count[w] - n * p), 3.0 * sigma) << w << " " << count[w];
  }
}

TEST(Splits, StratifiedPartitionHasNoOverlap) {
  const auto cfg = default_synth_config(11, 40, 10, 3);
  const Dataset d = generate_synthetic(cfg, 4);
  const auto split = make_splits(d.class_names(), 1, 5).front();
  const Partition p = partition(d, split);
  EXPECT_EQ(p.train.size() + p.test.size(), d.size());
  std::set<std::string> train_ids;
  for (auto i : p.train) train_ids.insert(d[i].id);
  for (auto i : p.test) EXPECT_EQ(train_ids.count(d[i].id), 0u);
  std::map<std::string, int> per_class_test;
  for (auto i : p.test) ++per_class_test[*d[i].label];
  for (const auto& c : d.class_names()) EXPECT_EQ(per_class_test[c], 8) << c;
  const Partition again = partition(d, split);
  EXPECT_EQ(again.train, p.train);
  EXPECT_EQ(again.test, p.test);
}

TEST(Evaluate, StubClassifiers) {
  const auto words = eleven();
  const std::vector<std::string> unseen(words.begin() + 6, words.end());
  const EmotionLexicon lex = lexicon_for(words, unseen);
  const auto items = labelled_items(words, 3);

  const SplitResult perfect = evaluate(items, lex, [&](const Eigen::VectorXd& x) {
    Eigen::Index k;
    x.maxCoeff(&k);
    return words[std::size_t(k)];
  });
  EXPECT_EQ(perfect.seen_accuracy, 1.0);
  EXPECT_EQ(perfect.unseen_accuracy, 1.0);
  EXPECT_EQ(perfect.harmonic, 1.0);
  EXPECT_EQ(perfect.seen_total + perfect.unseen_total, long(items.size()));
  EXPECT_EQ(perfect.confusion.trace(), int(items.size()));

  const SplitResult fixed = evaluate(items, lex, [&](const Eigen::VectorXd&) { return words[0]; });
  EXPECT_EQ(fixed.unseen_accuracy, 0.0);
  EXPECT_EQ(fixed.harmonic, 0.0);
  EXPECT_NEAR(fixed.seen_accuracy, 1.0 / 6.0, 1e-15);

  auto bad = items;
  bad[0].label = "nonsense";
  EXPECT_THROW(evaluate(bad, lex, [&](const Eigen::VectorXd&) { return words[0]; }), ContractError);
  EXPECT_THROW(evaluate(items, lex, [&](const Eigen::VectorXd&) { return std::string("zzz"); }),
               ContractError);
}

TEST(Evaluate, ConfusionRecomputesAccuraciesExactly) {
  const auto words = eleven();
  const std::vector<std::string> unseen(words.begin(), words.begin() + 5);
  const EmotionLexicon lex = lexicon_for(words, unseen);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  const auto items = labelled_items(words, 7);
  std::map<std::string, std::string> answer;
  for (const auto& f : items) answer[f.id] = pick(rng) % 3 == 0 ? f.label : words[pick(rng)];
  const SplitResult r = evaluate(items, lex, [&](const Eigen::VectorXd& x) {
    for (const auto& f : items)
      if (f.values == x) return answer[f.id];
    return words[0];
  });
  std::vector<bool> flags;
  for (std::size_t i = 0; i < words.size(); ++i) flags.push_back(lex.is_unseen(i));
  const auto [s, u] = accuracies_from_confusion(r.confusion, flags);
  EXPECT_EQ(s, r.seen_accuracy);
  EXPECT_EQ(u, r.unseen_accuracy);
  EXPECT_EQ(r.confusion.sum(), int(items.size()));
  EXPECT_EQ(r.harmonic, harmonic_mean(s, u));
}

TEST(Report, AggregateAndManifestValidation) {
  GzslReport report;
  const auto words = eleven();
  const EmotionLexicon lex = lexicon_for(words, {words.begin() + 6, words.end()});
  const auto items = labelled_items(words, 2);
  for (int k = 0; k < 2; ++k) {
    report.splits.push_back(evaluate(items, lex, [&](const Eigen::VectorXd& x) {
      Eigen::Index i;
      x.maxCoeff(&i);
      return k == 0 ? words[std::size_t(i)] : words[0];
    }));
    report.splits.back().split.seen.assign(words.begin(), words.begin() + 6);
    report.splits.back().split.unseen.assign(words.begin() + 6, words.end());
  }
  report.config_hash = hash_text("x");
  report.aggregate();
  EXPECT_EQ(report.mean_harmonic, 0.5);
  const auto m = report.manifest({{"a", 1}});
  EXPECT_NO_THROW(check_report_manifest(m));
  auto tampered = m;
  tampered["splits"][0]["seen_accuracy"] = 0.25;
  EXPECT_THROW(check_report_manifest(tampered), SchemaError);
  auto wrong_mean = m;
  wrong_mean["aggregate"]["harmonic_mean"] = 0.9;
  EXPECT_THROW(check_report_manifest(wrong_mean), SchemaError);
  auto no_format = m;
  no_format.erase("format");
  EXPECT_THROW(check_report_manifest(no_format), SchemaError);
  // One row per split plus the aggregate row and a header.
  const std::string csv = report.csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_NE(csv.find("\nmean,"), std::string::npos);
}

TEST(HashText, Fnv1a) {
  EXPECT_EQ(hash_text(""), "cbf29ce484222325");
  EXPECT_EQ(hash_text("a"), "af63dc4c8601ec8c");
}

TEST(Experiment, TinyRunIsDeterministicAndParallelSafe) {
  const auto cfg = default_synth_config(5, 6, 16, 8);
  const Dataset d = generate_synthetic(cfg, 9);
  const EmotionLexicon lex = synthetic_lexicon(cfg, 6, 10);
  const ExperimentConfig ec = tiny_experiment();

  const auto dir = std::filesystem::temp_directory_path() / "gzsl_eval_experiment";
  std::filesystem::remove_all(dir);
  const GzslReport a = run_experiment(d, lex, ec, 1, dir);
  const GzslReport b = run_experiment(d, lex, ec, 2);
  EXPECT_EQ(a.csv(), b.csv());
  EXPECT_EQ(a.config_hash, b.config_hash);
  ASSERT_EQ(a.splits.size(), 2u);
  for (const char* f : {"report.csv", "report.json", "split0_fsger.ckpt", "split1_scaae.ckpt"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::ifstream in(dir / "report.json");
  EXPECT_NO_THROW(check_report_manifest(nlohmann::json::parse(in)));
  std::filesystem::remove_all(dir);

  ExperimentConfig one = ec;
  one.n_splits = 1;
  const GzslReport single = run_experiment(d, lex, one);
  EXPECT_EQ(single.mean_harmonic, single.splits[0].harmonic);

  // Every test item is counted once and never used for training.
  for (const auto& s : a.splits) {
    EXPECT_EQ(s.seen_total + s.unseen_total, long(partition(d, s.split).test.size()));
    EXPECT_EQ(s.confusion.sum(), s.seen_total + s.unseen_total);
  }
}
