#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "medtext/corpus.hpp"
#include "medtext/dictmatch.hpp"

namespace medtext {

/// Analysis chain shared by index and queries: tokenize, lowercase, drop
/// stopwords, Porter-stem. The stopword list is the classic 33-word English
/// set used by standard full-text analyzers.
std::vector<std::string> analyze_for_retrieval(const std::string& text);

bool is_stopword(const std::string& lowercased);

struct NormalizationResult {
  struct Candidate {
    ConceptRef concept_ref;
    double score = 0.0;
  };
  ConceptRef concept_ref;  // top candidate, or conceptless
  double score = 0.0;
  std::vector<Candidate> candidates;  // descending score, concept-id tie-break
};

/// TF-IDF retrieval index over vocabulary terms: one document per synonym,
/// each storing its concept id. Entries are analyzed with stemming and
/// stopword removal; entries reduced to zero tokens are skipped.
class TermIndex {
 public:
  /// filter, when present, restricts the index to the given concept ids.
  static TermIndex build(const std::vector<VocabEntry>& entries,
                         const std::optional<std::unordered_set<std::string>>& filter =
                             std::nullopt);

  /// Disjunctive (any-token) TF-IDF cosine retrieval. Conceptless exactly
  /// when no indexed term shares an analyzed token with the span text. Ties
  /// go to the lexicographically greater concept id.
  NormalizationResult normalize_span(const std::string& text) const;

  std::size_t size() const { return docs_.size(); }
  int64_t skipped_entries() const { return skipped_; }

 private:
  struct TermDoc {
    std::string concept_id;
    std::string vocabulary;
    std::vector<std::pair<std::string, int>> token_counts;
    double norm = 0.0;
  };

  double idf(const std::string& token) const;

  std::vector<TermDoc> docs_;
  std::unordered_map<std::string, std::vector<int>> postings_;  // token -> doc ids
  std::unordered_map<std::string, int> df_;
  int64_t skipped_ = 0;
};

/// One concept id per line; blank lines and #-comments ignored.
std::unordered_set<std::string> load_concept_filter(const std::filesystem::path& path);

/// Assigns a concept to every span of the corpus from its surface text.
void normalize_corpus(Corpus& corpus, const TermIndex& index);

}  // namespace medtext
