#include "gzsl/errors.hpp"
#include "gzsl/lexicon.hpp"
#include "gzsl/synthetic.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

using namespace gzsl;

namespace {

EmotionLexicon random_lexicon(int n, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::string> words;
  Eigen::MatrixXd e(n, d);
  for (int i = 0; i < n; ++i) {
    words.push_back("w" + std::to_string(i));
    for (int k = 0; k < d; ++k) e(i, k) = g(rng);
  }
  return EmotionLexicon(words, e);
}

std::size_t scan_oracle(const EmotionLexicon& lex, const Eigen::VectorXd& q, Restrict r) {
  std::size_t best = lex.size();
  double best_d = 0.0;
  for (std::size_t i = 0; i < lex.size(); ++i) {
    if (r == Restrict::kSeen && lex.is_unseen(i)) continue;
    if (r == Restrict::kUnseen && !lex.is_unseen(i)) continue;
    double d = 0.0;
    for (Eigen::Index k = 0; k < q.size(); ++k) {
      const double t = q[k] - lex.embeddings()(Eigen::Index(i), k);
      d += t * t;
    }
    if (best == lex.size() || d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

}  // namespace

TEST(Embeddings, ReadsWantedWordsInOrder) {
  std::istringstream in("3 2\nalpha 1 2\nbeta 3 4\ngamma 5 6\n");
  const EmotionLexicon lex = read_embeddings(in, {"gamma", "alpha"});
  ASSERT_EQ(lex.size(), 2u);
  EXPECT_EQ(lex.dim(), 2);
  EXPECT_EQ(lex.words(), (std::vector<std::string>{"gamma", "alpha"}));
  EXPECT_EQ(lex.embedding("gamma"), Eigen::Vector2d(5, 6));
  EXPECT_FALSE(lex.is_unseen(0));
}

TEST(Embeddings, MissingWordsAreNamed) {
  std::istringstream in("alpha 1 2\n");
  try {
    read_embeddings(in, {"alpha", "zeta", "eta"});
    FAIL();
  } catch (const LookupError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("zeta"), std::string::npos);
    EXPECT_NE(msg.find("eta"), std::string::npos);
  }
}

TEST(Embeddings, RaggedAndMalformedRowsAreParseErrors) {
  std::istringstream ragged("alpha 1 2\nbeta 3\n");
  EXPECT_THROW(read_embeddings(ragged, {"alpha", "beta"}), ParseError);
  std::istringstream bad("alpha 1 x\n");
  EXPECT_THROW(read_embeddings(bad, {"alpha"}), ParseError);
}

TEST(Embeddings, FileRoundTripIsBitExact) {
  std::mt19937_64 rng(1);
  const EmotionLexicon lex = random_lexicon(11, 300, rng);
  const auto path = std::filesystem::temp_directory_path() / "gzsl_lexicon_test.emb";
  write_embeddings_file(path, lex);
  const EmotionLexicon back = load_embeddings(path, lex.words());
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), 11u);
  EXPECT_EQ(back.dim(), 300);
  EXPECT_EQ(std::memcmp(back.embeddings().data(), lex.embeddings().data(),
                        sizeof(double) * lex.embeddings().size()),
            0);
}

TEST(Embeddings, SyntheticLexiconHasRequestedDimension) {
  const auto cfg = default_synth_config(11, 2, 10, 1);
  const EmotionLexicon lex = synthetic_lexicon(cfg, 16, 2);
  EXPECT_EQ(lex.size(), 11u);
  EXPECT_EQ(lex.dim(), 16);
  std::stringstream buf;
  write_embeddings(buf, lex);
  EXPECT_EQ(read_embeddings(buf, lex.words()).embeddings(), lex.embeddings());
}

TEST(Lexicon, SeenUnseenPartition) {
  std::mt19937_64 rng(2);
  const EmotionLexicon lex = random_lexicon(5, 3, rng).with_unseen({"w1", "w3"});
  EXPECT_EQ(lex.unseen_words(), (std::vector<std::string>{"w1", "w3"}));
  EXPECT_EQ(lex.seen_words(), (std::vector<std::string>{"w0", "w2", "w4"}));
  EXPECT_THROW(lex.with_unseen({"nope"}), LookupError);
  EXPECT_THROW(lex.index_of("nope"), LookupError);
  EXPECT_THROW(EmotionLexicon({"a", "a"}, Eigen::MatrixXd::Zero(2, 2)), Error);
  EXPECT_THROW(EmotionLexicon({"a", "b"}, Eigen::MatrixXd::Zero(3, 2)), Error);
}

TEST(Nearest, Examples) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(2, 4);
  e(1, 0) = 1.0;
  const EmotionLexicon lex({"calm", "joy"}, e);
  EXPECT_EQ(nearest_emotion(lex, Eigen::Vector4d(0.4, 0, 0, 0)), "calm");
  EXPECT_EQ(nearest_emotion(lex, Eigen::Vector4d(0.6, 0, 0, 0)), "joy");
  // Exact tie resolves to the earlier entry.
  EXPECT_EQ(nearest_emotion(lex, Eigen::Vector4d(0.5, 0, 0, 0)), "calm");
  EXPECT_THROW(nearest_emotion(lex, Eigen::Vector3d::Zero()), Error);
  EXPECT_THROW(nearest_emotion(lex, Eigen::Vector4d::Zero(), Restrict::kUnseen), ContractError);
  EXPECT_EQ(nearest_emotion(lex.with_unseen({"joy"}), Eigen::Vector4d::Zero(), Restrict::kUnseen), "joy");
}

TEST(Nearest, MatchesExhaustiveScan) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  const EmotionLexicon lex = random_lexicon(11, 16, rng).with_unseen({"w2", "w5", "w7", "w8", "w10"});
  for (std::size_t i = 0; i < lex.size(); ++i) {
    EXPECT_EQ(nearest_index(lex, lex.embedding(i)), i);
  }
  for (int trial = 0; trial < 2000; ++trial) {
    Eigen::VectorXd q(16);
    for (Eigen::Index k = 0; k < 16; ++k) q[k] = g(rng);
    for (Restrict r : {Restrict::kAll, Restrict::kSeen, Restrict::kUnseen}) {
      const std::size_t got = nearest_index(lex, q, r);
      EXPECT_EQ(got, scan_oracle(lex, q, r));
    }
    // Translating query and entries together leaves the answer unchanged.
    const Eigen::VectorXd shift = Eigen::VectorXd::Constant(16, 0.375);
    Eigen::MatrixXd moved = lex.embeddings();
    moved.rowwise() += shift.transpose();
    const EmotionLexicon lex2(lex.words(), moved);
    EXPECT_EQ(nearest_index(lex2, q + shift), nearest_index(lex, q));
  }
}

TEST(Distances, SymmetricWithZeroDiagonal) {
  std::mt19937_64 rng(4);
  const EmotionLexicon lex = random_lexicon(7, 5, rng);
  const Eigen::MatrixXd d = pairwise_distances(lex);
  EXPECT_EQ(d, d.transpose());
  EXPECT_EQ(d.diagonal(), Eigen::VectorXd::Zero(7));
  EXPECT_NEAR(d(2, 5), (lex.embedding(2) - lex.embedding(5)).norm(), 1e-14);
  const EmotionLexicon single({"only"}, Eigen::MatrixXd::Ones(1, 3));
  EXPECT_EQ(pairwise_distances(single), Eigen::MatrixXd::Zero(1, 1));
}
