#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace gzsl {

enum class Restrict { kAll, kSeen, kUnseen };

/// Emotion words with their semantic embeddings, split into seen and unseen
/// classes. Entry order is significant: nearest-neighbour ties resolve to the
/// earliest entry.
class EmotionLexicon {
 public:
  EmotionLexicon() = default;
  // All entries start out seen.
  EmotionLexicon(std::vector<std::string> words, Eigen::MatrixXd embeddings);

  // Copy with the given words marked unseen and every other word seen.
  EmotionLexicon with_unseen(const std::vector<std::string>& unseen_words) const;

  std::size_t size() const { return words_.size(); }
  Eigen::Index dim() const { return embeddings_.cols(); }
  const std::vector<std::string>& words() const { return words_; }
  // One row per word.
  const Eigen::MatrixXd& embeddings() const { return embeddings_; }
  Eigen::VectorXd embedding(std::size_t i) const { return embeddings_.row(Eigen::Index(i)).transpose(); }
  Eigen::VectorXd embedding(const std::string& word) const { return embedding(index_of(word)); }

  std::size_t index_of(const std::string& word) const;
  bool contains(const std::string& word) const;
  bool is_unseen(std::size_t i) const { return unseen_[i]; }
  bool is_unseen(const std::string& word) const { return unseen_[index_of(word)]; }
  std::vector<std::string> seen_words() const;
  std::vector<std::string> unseen_words() const;

 private:
  std::vector<std::string> words_;
  Eigen::MatrixXd embeddings_;
  std::vector<bool> unseen_;
};

/// Reads `word v1 ... vD` lines, tolerating an optional leading `<count> <dim>`
/// line, and keeps the wanted words in the order given. Throws LookupError
/// naming every wanted word the file lacks.
EmotionLexicon read_embeddings(std::istream& in, const std::vector<std::string>& wanted_words,
                               const std::string& source = "<stream>");
EmotionLexicon load_embeddings(const std::filesystem::path& path,
                               const std::vector<std::string>& wanted_words);

void write_embeddings(std::ostream& out, const EmotionLexicon& lexicon);
void write_embeddings_file(const std::filesystem::path& path, const EmotionLexicon& lexicon);

// Index of the entry closest to query in l2 distance among the allowed entries.
std::size_t nearest_index(const EmotionLexicon& lexicon, const Eigen::Ref<const Eigen::VectorXd>& query,
                          Restrict restrict = Restrict::kAll);

std::string nearest_emotion(const EmotionLexicon& lexicon,
                            const Eigen::Ref<const Eigen::VectorXd>& query,
                            Restrict restrict = Restrict::kAll);

// Symmetric matrix of l2 distances between entries.
Eigen::MatrixXd pairwise_distances(const EmotionLexicon& lexicon);

}  // namespace gzsl
