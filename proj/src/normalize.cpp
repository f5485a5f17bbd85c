#include "medtext/normalize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "medtext/stemmer.hpp"
#include "medtext/tokenizer.hpp"
#include "medtext/utf8.hpp"

namespace medtext {

namespace {

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> kStopwords = {
      "a",    "an",   "and",  "are",  "as",    "at",   "be",   "but",  "by",
      "for",  "if",   "in",   "into", "is",    "it",   "no",   "not",  "of",
      "on",   "or",   "such", "that", "the",   "their", "then", "there",
      "these", "they", "this", "to",  "was",   "will", "with"};
  return kStopwords;
}

}  // namespace

bool is_stopword(const std::string& lowercased) {
  return stopwords().count(lowercased) > 0;
}

std::vector<std::string> analyze_for_retrieval(const std::string& text) {
  std::vector<std::string> out;
  for (const Token& tok : tokenize(text)) {
    const std::string lower = utf8::to_lower(tok.text);
    if (is_stopword(lower)) continue;
    out.push_back(porter_stem(lower));
  }
  return out;
}

TermIndex TermIndex::build(
    const std::vector<VocabEntry>& entries,
    const std::optional<std::unordered_set<std::string>>& filter) {
  TermIndex index;
  for (const VocabEntry& entry : entries) {
    if (filter && !filter->count(entry.concept_id)) continue;
    const std::vector<std::string> tokens = analyze_for_retrieval(entry.term);
    if (tokens.empty()) {
      ++index.skipped_;
      continue;
    }
    TermDoc doc;
    doc.concept_id = entry.concept_id;
    doc.vocabulary = entry.vocabulary;
    std::map<std::string, int> counts;
    for (const std::string& tok : tokens) ++counts[tok];
    doc.token_counts.assign(counts.begin(), counts.end());
    const int id = static_cast<int>(index.docs_.size());
    for (const auto& [tok, count] : doc.token_counts) {
      index.postings_[tok].push_back(id);
      ++index.df_[tok];
    }
    index.docs_.push_back(std::move(doc));
  }
  // Document norms need the final IDF table, so compute them afterwards.
  for (TermDoc& doc : index.docs_) {
    double sum = 0.0;
    for (const auto& [tok, count] : doc.token_counts) {
      const double w = (1.0 + std::log(static_cast<double>(count))) * index.idf(tok);
      sum += w * w;
    }
    doc.norm = std::sqrt(sum);
  }
  return index;
}

double TermIndex::idf(const std::string& token) const {
  const auto it = df_.find(token);
  const int df = it == df_.end() ? 0 : it->second;
  return 1.0 + std::log(static_cast<double>(docs_.size()) / (1.0 + df));
}

NormalizationResult TermIndex::normalize_span(const std::string& text) const {
  NormalizationResult result;
  result.concept_ref = ConceptRef::concept_less();

  const std::vector<std::string> tokens = analyze_for_retrieval(text);
  if (tokens.empty() || docs_.empty()) return result;

  std::map<std::string, int> query_counts;
  for (const std::string& tok : tokens) ++query_counts[tok];

  std::unordered_map<std::string, double> query_weights;
  double query_norm = 0.0;
  for (const auto& [tok, count] : query_counts) {
    const double w = (1.0 + std::log(static_cast<double>(count))) * idf(tok);
    query_weights[tok] = w;
    query_norm += w * w;
  }
  query_norm = std::sqrt(query_norm);

  // Disjunctive retrieval: every document sharing at least one token is a
  // candidate, regardless of score.
  std::map<int, double> dots;
  for (const auto& [tok, qw] : query_weights) {
    const auto it = postings_.find(tok);
    if (it == postings_.end()) continue;
    const double token_idf = idf(tok);
    for (int doc_id : it->second) {
      const TermDoc& doc = docs_[doc_id];
      const auto tc = std::lower_bound(
          doc.token_counts.begin(), doc.token_counts.end(), tok,
          [](const auto& a, const std::string& t) { return a.first < t; });
      const double dw = (1.0 + std::log(static_cast<double>(tc->second))) * token_idf;
      dots[doc_id] += qw * dw;
    }
  }
  if (dots.empty()) return result;

  // Best score per concept.
  std::map<std::string, NormalizationResult::Candidate> per_concept;
  for (const auto& [doc_id, dot] : dots) {
    const TermDoc& doc = docs_[doc_id];
    const double denom = query_norm * doc.norm;
    const double score = denom > 0.0 ? dot / denom : 0.0;
    auto [it, inserted] = per_concept.try_emplace(
        doc.concept_id,
        NormalizationResult::Candidate{ConceptRef{doc.concept_id, doc.vocabulary, false},
                                       score});
    if (!inserted && score > it->second.score) it->second.score = score;
  }

  result.candidates.reserve(per_concept.size());
  for (const auto& [id, cand] : per_concept) result.candidates.push_back(cand);
  std::sort(result.candidates.begin(), result.candidates.end(),
            [](const auto& a, const auto& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.concept_ref.code > b.concept_ref.code;
            });
  result.concept_ref = result.candidates.front().concept_ref;
  result.score = result.candidates.front().score;
  return result;
}

std::unordered_set<std::string> load_concept_filter(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open filter " + path.string());
  std::unordered_set<std::string> filter;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    filter.insert(line);
  }
  return filter;
}

void normalize_corpus(Corpus& corpus, const TermIndex& index) {
  for (AnnotatedDocument& doc : corpus.documents)
    for (Span& span : doc.spans)
      span.concept_ref = index.normalize_span(span_text(doc, span)).concept_ref;
}

}  // namespace medtext
