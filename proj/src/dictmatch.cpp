#include "medtext/dictmatch.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "medtext/utf8.hpp"

namespace medtext {

std::vector<VocabEntry> load_vocab_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open vocabulary " + path.string());

  std::vector<VocabEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = (t1 == std::string::npos) ? std::string::npos
                                                     : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw ParseError(path.string() + " line " + std::to_string(line_no) +
                       ": expected concept_id<TAB>term<TAB>vocabulary");
    VocabEntry entry{line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1),
                     line.substr(t2 + 1)};
    if (entry.concept_id.empty() || entry.term.empty())
      throw ParseError(path.string() + " line " + std::to_string(line_no) +
                       ": empty concept id or term");
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<std::string> analyze_phrase(const std::string& term) {
  std::vector<std::string> out;
  for (const Token& tok : tokenize(term)) out.push_back(utf8::to_lower(tok.text));
  return out;
}

PhraseIndex PhraseIndex::build(const Corpus& corpus) {
  PhraseIndex index;
  index.doc_tokens_.resize(corpus.documents.size());
  index.doc_terms_.resize(corpus.documents.size());
  for (const AnnotatedDocument& doc : corpus.documents)
    index.doc_ids_.push_back(doc.doc_id);
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    index.doc_tokens_[d] = tokenize(corpus.documents[d].text);
    auto& terms = index.doc_terms_[d];
    terms.reserve(index.doc_tokens_[d].size());
    for (std::size_t p = 0; p < index.doc_tokens_[d].size(); ++p) {
      terms.push_back(utf8::to_lower(index.doc_tokens_[d][p].text));
      index.postings_[terms.back()].push_back(
          {static_cast<int32_t>(d), static_cast<int32_t>(p)});
    }
  }
  return index;
}

const std::vector<PhraseIndex::Posting>* PhraseIndex::postings(
    const std::string& token) const {
  const auto it = postings_.find(token);
  return it == postings_.end() ? nullptr : &it->second;
}

std::vector<std::vector<Span>> match_vocabulary(const PhraseIndex& index,
                                                const std::vector<VocabEntry>& entries,
                                                EntityLabel label) {
  const std::size_t n_docs = index.doc_count();

  // (doc, start, end) -> winning concept under the greater-id tie-break.
  std::map<std::tuple<int32_t, int64_t, int64_t>, ConceptRef> hits;

  for (const VocabEntry& entry : entries) {
    const std::vector<std::string> phrase = analyze_phrase(entry.term);
    if (phrase.empty()) continue;
    const auto* first = index.postings(phrase[0]);
    if (!first) continue;
    for (const PhraseIndex::Posting& posting : *first) {
      const auto& terms = index.doc_terms(posting.doc);
      const std::size_t p = static_cast<std::size_t>(posting.position);
      if (p + phrase.size() > terms.size()) continue;
      bool match = true;
      for (std::size_t k = 1; k < phrase.size() && match; ++k)
        match = terms[p + k] == phrase[k];
      if (!match) continue;

      const auto& tokens = index.doc_tokens()[posting.doc];
      const std::tuple<int32_t, int64_t, int64_t> key{
          posting.doc, tokens[p].start, tokens[p + phrase.size() - 1].end};
      const ConceptRef concept_ref{entry.concept_id, entry.vocabulary, false};
      auto [it, inserted] = hits.emplace(key, concept_ref);
      if (!inserted) {
        ConceptRef& cur = it->second;
        if (concept_ref.code > cur.code ||
            (concept_ref.code == cur.code && concept_ref.vocabulary > cur.vocabulary))
          cur = concept_ref;
      }
    }
  }

  std::vector<std::vector<Span>> result(n_docs);
  for (const auto& [key, concept_ref] : hits) {
    const auto& [doc, start, end] = key;
    result[doc].push_back(Span{{{start, end}}, label, concept_ref});
  }
  // std::map iteration already yields (doc, start, end) order.
  return result;
}

}  // namespace medtext
