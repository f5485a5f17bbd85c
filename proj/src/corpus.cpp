#include "medtext/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "medtext/utf8.hpp"

namespace medtext {

namespace {

const std::vector<EntityLabel> kLabels = {
    EntityLabel::Drug, EntityLabel::ADR, EntityLabel::Disease,
    EntityLabel::Symptom, EntityLabel::Finding};

}  // namespace

std::string_view to_string(EntityLabel label) {
  switch (label) {
    case EntityLabel::Drug: return "Drug";
    case EntityLabel::ADR: return "ADR";
    case EntityLabel::Disease: return "Disease";
    case EntityLabel::Symptom: return "Symptom";
    case EntityLabel::Finding: return "Finding";
  }
  return "?";
}

std::optional<EntityLabel> parse_label(std::string_view name) {
  for (EntityLabel label : kLabels)
    if (name == to_string(label)) return label;
  return std::nullopt;
}

const std::vector<EntityLabel>& all_labels() { return kLabels; }

bool Span::overlaps(const Span& other) const {
  for (const Fragment& a : fragments)
    for (const Fragment& b : other.fragments)
      if (a.start < b.end && b.start < a.end) return true;
  return false;
}

bool span_less(const Span& a, const Span& b) {
  if (a.start() != b.start()) return a.start() < b.start();
  if (a.end() != b.end()) return a.end() < b.end();
  if (a.fragments != b.fragments) return a.fragments < b.fragments;
  return static_cast<int>(a.label) < static_cast<int>(b.label);
}

void validate_document(const AnnotatedDocument& doc, bool enforce_overlap_rule) {
  const int64_t text_len = static_cast<int64_t>(utf8::length(doc.text));
  for (const Span& span : doc.spans) {
    if (span.fragments.empty())
      throw ValidationError("document " + doc.doc_id + ": span with no fragments");
    int64_t prev_end = -1;
    for (const Fragment& f : span.fragments) {
      if (f.start < 0 || f.start >= f.end || f.end > text_len)
        throw ValidationError("document " + doc.doc_id + ": fragment [" +
                              std::to_string(f.start) + "," + std::to_string(f.end) +
                              ") out of range for text of length " +
                              std::to_string(text_len));
      if (f.start < prev_end)
        throw ValidationError("document " + doc.doc_id +
                              ": fragments unsorted or overlapping within a span");
      prev_end = f.end;
    }
    if (span.concept_ref) {
      const ConceptRef& c = *span.concept_ref;
      if (c.conceptless && !c.code.empty())
        throw ValidationError("document " + doc.doc_id +
                              ": conceptless span carries a concept code");
      if (!c.conceptless && c.code.empty())
        throw ValidationError("document " + doc.doc_id +
                              ": concept reference with empty code");
    }
  }
  if (!enforce_overlap_rule) return;
  // Spans may only overlap through a fragment identical in both.
  for (std::size_t i = 0; i < doc.spans.size(); ++i) {
    for (std::size_t j = i + 1; j < doc.spans.size(); ++j) {
      for (const Fragment& a : doc.spans[i].fragments) {
        for (const Fragment& b : doc.spans[j].fragments) {
          if (a.start < b.end && b.start < a.end && !(a == b))
            throw ValidationError(
                "document " + doc.doc_id + ": spans overlap at [" +
                std::to_string(std::max(a.start, b.start)) + "," +
                std::to_string(std::min(a.end, b.end)) +
                ") without sharing an identical fragment");
        }
      }
    }
  }
}

void validate_corpus(const Corpus& corpus, bool enforce_overlap_rule) {
  std::unordered_set<std::string> seen;
  for (const AnnotatedDocument& doc : corpus.documents) {
    if (!seen.insert(doc.doc_id).second)
      throw ValidationError("duplicate doc_id: " + doc.doc_id);
    validate_document(doc, enforce_overlap_rule);
  }
}

std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus,
                                       double train_fraction, uint64_t seed) {
  if (corpus.documents.empty())
    throw ValidationError("split_corpus: empty corpus");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("split_corpus: train_fraction must be in (0,1)");

  std::vector<std::size_t> order(corpus.documents.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return corpus.documents[a].doc_id < corpus.documents[b].doc_id;
  });

  // Fisher-Yates with an explicit generator so the partition is identical
  // across platforms for a given seed.
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }

  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(order.size())));

  Corpus train{corpus.name + "/train", {}};
  Corpus test{corpus.name + "/test", {}};
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = (i < n_train) ? train : test;
    dst.documents.push_back(corpus.documents[order[i]]);
  }
  auto by_id = [](const AnnotatedDocument& a, const AnnotatedDocument& b) {
    return a.doc_id < b.doc_id;
  };
  std::sort(train.documents.begin(), train.documents.end(), by_id);
  std::sort(test.documents.begin(), test.documents.end(), by_id);
  return {std::move(train), std::move(test)};
}

std::string span_text(const AnnotatedDocument& doc, const Span& span) {
  std::string out;
  for (std::size_t i = 0; i < span.fragments.size(); ++i) {
    if (i > 0) out += ' ';
    out += utf8::substr(doc.text, static_cast<std::size_t>(span.fragments[i].start),
                        static_cast<std::size_t>(span.fragments[i].end));
  }
  return out;
}

}  // namespace medtext
