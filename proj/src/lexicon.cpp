#include "gzsl/lexicon.hpp"

#include "gzsl/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace gzsl {

EmotionLexicon::EmotionLexicon(std::vector<std::string> words, Eigen::MatrixXd embeddings)
    : words_(std::move(words)), embeddings_(std::move(embeddings)), unseen_(words_.size(), false) {
  if (Eigen::Index(words_.size()) != embeddings_.rows()) {
    throw ShapeError("lexicon: " + std::to_string(words_.size()) + " words but " +
                     std::to_string(embeddings_.rows()) + " embedding rows");
  }
  if (!embeddings_.allFinite()) throw NumericError("lexicon: non-finite embedding entry");
  for (std::size_t i = 0; i < words_.size(); ++i) {
    for (std::size_t j = i + 1; j < words_.size(); ++j) {
      if (words_[i] == words_[j]) throw SchemaError("lexicon: duplicate word '" + words_[i] + "'");
    }
  }
}

EmotionLexicon EmotionLexicon::with_unseen(const std::vector<std::string>& unseen_words) const {
  EmotionLexicon out = *this;
  std::fill(out.unseen_.begin(), out.unseen_.end(), false);
  for (const auto& w : unseen_words) out.unseen_[index_of(w)] = true;
  return out;
}

std::size_t EmotionLexicon::index_of(const std::string& word) const {
  const auto it = std::find(words_.begin(), words_.end(), word);
  if (it == words_.end()) throw LookupError("lexicon has no entry for '" + word + "'");
  return static_cast<std::size_t>(it - words_.begin());
}

bool EmotionLexicon::contains(const std::string& word) const {
  return std::find(words_.begin(), words_.end(), word) != words_.end();
}

std::vector<std::string> EmotionLexicon::seen_words() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!unseen_[i]) out.push_back(words_[i]);
  }
  return out;
}

std::vector<std::string> EmotionLexicon::unseen_words() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (unseen_[i]) out.push_back(words_[i]);
  }
  return out;
}

EmotionLexicon read_embeddings(std::istream& in, const std::vector<std::string>& wanted_words,
                               const std::string& source) {
  std::map<std::string, Eigen::VectorXd> found;
  std::string line;
  std::size_t line_no = 0;
  Eigen::Index dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream row(line);
    std::vector<std::string> tokens;
    for (std::string tok; row >> tok;) tokens.push_back(std::move(tok));
    if (tokens.empty()) continue;
    const auto where = source + ":" + std::to_string(line_no);
    if (line_no == 1 && tokens.size() == 2) {
      long a = 0, b = 0;
      const auto ra = std::from_chars(tokens[0].data(), tokens[0].data() + tokens[0].size(), a);
      const auto rb = std::from_chars(tokens[1].data(), tokens[1].data() + tokens[1].size(), b);
      if (ra.ec == std::errc() && rb.ec == std::errc() &&
          ra.ptr == tokens[0].data() + tokens[0].size() &&
          rb.ptr == tokens[1].data() + tokens[1].size()) {
        continue;
      }
    }
    if (tokens.size() < 2) throw ParseError(where + ": word without vector");
    const Eigen::Index d = Eigen::Index(tokens.size()) - 1;
    if (dim < 0) dim = d;
    if (d != dim) {
      throw ParseError(where + ": vector has " + std::to_string(d) + " entries, expected " +
                       std::to_string(dim));
    }
    if (std::find(wanted_words.begin(), wanted_words.end(), tokens[0]) == wanted_words.end()) {
      continue;
    }
    Eigen::VectorXd v(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      const auto& tok = tokens[std::size_t(k) + 1];
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v[k]);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError(where + ": malformed number '" + tok + "'");
      }
    }
    found.emplace(tokens[0], std::move(v));
  }
  std::string missing;
  for (const auto& w : wanted_words) {
    if (!found.contains(w)) missing += (missing.empty() ? "" : ", ") + w;
  }
  if (!missing.empty()) throw LookupError(source + ": no embedding for " + missing);
  Eigen::MatrixXd table(Eigen::Index(wanted_words.size()), std::max<Eigen::Index>(dim, 0));
  for (std::size_t i = 0; i < wanted_words.size(); ++i) {
    table.row(Eigen::Index(i)) = found.at(wanted_words[i]).transpose();
  }
  return EmotionLexicon(wanted_words, std::move(table));
}

EmotionLexicon load_embeddings(const std::filesystem::path& path,
                               const std::vector<std::string>& wanted_words) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file " + path.string());
  return read_embeddings(in, wanted_words, path.string());
}

void write_embeddings(std::ostream& out, const EmotionLexicon& lexicon) {
  out << lexicon.size() << ' ' << lexicon.dim() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < lexicon.size(); ++i) {
    out << lexicon.words()[i];
    for (Eigen::Index k = 0; k < lexicon.dim(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", lexicon.embeddings()(Eigen::Index(i), k));
      out << ' ' << buf;
    }
    out << '\n';
  }
}

void write_embeddings_file(const std::filesystem::path& path, const EmotionLexicon& lexicon) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write embedding file " + path.string());
  write_embeddings(out, lexicon);
}

std::size_t nearest_index(const EmotionLexicon& lexicon,
                          const Eigen::Ref<const Eigen::VectorXd>& query, Restrict restrict) {
  if (query.size() != lexicon.dim()) {
    throw ShapeError("nearest_emotion: query has dimension " + std::to_string(query.size()) +
                     ", lexicon has " + std::to_string(lexicon.dim()));
  }
  std::size_t best = lexicon.size();
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lexicon.size(); ++i) {
    if (restrict == Restrict::kSeen && lexicon.is_unseen(i)) continue;
    if (restrict == Restrict::kUnseen && !lexicon.is_unseen(i)) continue;
    const double d = (lexicon.embeddings().row(Eigen::Index(i)).transpose() - query).squaredNorm();
    if (best == lexicon.size() || d < best_dist) {
      best = i;
      best_dist = d;
    }
  }
  if (best == lexicon.size()) throw ContractError("nearest_emotion: no candidate classes");
  return best;
}

std::string nearest_emotion(const EmotionLexicon& lexicon,
                            const Eigen::Ref<const Eigen::VectorXd>& query, Restrict restrict) {
  return lexicon.words()[nearest_index(lexicon, query, restrict)];
}

Eigen::MatrixXd pairwise_distances(const EmotionLexicon& lexicon) {
  const auto n = Eigen::Index(lexicon.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = (lexicon.embeddings().row(i) - lexicon.embeddings().row(j)).norm();
      d(j, i) = d(i, j);
    }
  }
  return d;
}

}  // namespace gzsl
