#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "medtext/corpus.hpp"
#include "medtext/tokenizer.hpp"

namespace medtext {

/// One synonym line of a controlled vocabulary. A concept with k synonyms
/// occupies k entries.
struct VocabEntry {
  std::string concept_id;
  std::string term;
  std::string vocabulary;
};

/// TSV format: concept_id<TAB>term<TAB>vocabulary_name, one synonym per line.
std::vector<VocabEntry> load_vocab_tsv(const std::filesystem::path& path);

/// Token-position inverted index over a corpus. Tokens are lowercased; no
/// stemming, no stopword removal. The index copies what it needs from the
/// corpus (ids, token offsets); document order matches the corpus.
class PhraseIndex {
 public:
  static PhraseIndex build(const Corpus& corpus);

  struct Posting {
    int32_t doc = 0;
    int32_t position = 0;
  };

  const std::vector<Posting>* postings(const std::string& token) const;
  std::size_t doc_count() const { return doc_tokens_.size(); }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  const std::vector<std::vector<Token>>& doc_tokens() const { return doc_tokens_; }
  const std::vector<std::string>& doc_terms(int32_t doc) const { return doc_terms_[doc]; }

 private:
  std::vector<std::string> doc_ids_;
  std::vector<std::vector<Token>> doc_tokens_;          // raw tokens per document
  std::vector<std::vector<std::string>> doc_terms_;     // lowercased token texts
  std::unordered_map<std::string, std::vector<Posting>> postings_;
};

/// Emits a span for every exact consecutive-token occurrence of an entry's
/// token sequence. When two entries match the identical span, the concept
/// with the lexicographically greater concept id wins; duplicates (same
/// offsets, same concept_ref) are removed. Output order: document, span start,
/// span end. Result is indexed like the corpus documents.
std::vector<std::vector<Span>> match_vocabulary(const PhraseIndex& index,
                                                const std::vector<VocabEntry>& entries,
                                                EntityLabel label);

/// Lowercased token sequence of a vocabulary term under the standard
/// tokenizer. Empty when the term contains no word tokens.
std::vector<std::string> analyze_phrase(const std::string& term);

}  // namespace medtext
