#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "medtext/errors.hpp"

namespace medtext {

/// One contiguous character range of a span. Offsets count Unicode scalar
/// values, not bytes.
struct Fragment {
  int64_t start = 0;  // inclusive
  int64_t end = 0;    // exclusive

  friend bool operator==(const Fragment&, const Fragment&) = default;
  friend auto operator<=>(const Fragment&, const Fragment&) = default;
};

enum class EntityLabel { Drug, ADR, Disease, Symptom, Finding };

std::string_view to_string(EntityLabel label);
std::optional<EntityLabel> parse_label(std::string_view name);
const std::vector<EntityLabel>& all_labels();

/// Reference into a controlled vocabulary. conceptless marks spans for which
/// no vocabulary concept exists; such refs carry an empty code.
struct ConceptRef {
  std::string code;
  std::string vocabulary;
  bool conceptless = false;

  static ConceptRef concept_less() { return ConceptRef{"", "", true}; }
  friend bool operator==(const ConceptRef&, const ConceptRef&) = default;
};

/// A labeled mention: an ordered list of non-overlapping fragments. Two or
/// more fragments make the span discontinuous.
struct Span {
  std::vector<Fragment> fragments;
  EntityLabel label = EntityLabel::ADR;
  std::optional<ConceptRef> concept_ref;

  int64_t start() const { return fragments.front().start; }
  int64_t end() const { return fragments.back().end; }
  bool discontinuous() const { return fragments.size() > 1; }
  bool overlaps(const Span& other) const;

  friend bool operator==(const Span&, const Span&) = default;
};

/// Deterministic ordering: by first fragment start, then end, then the full
/// fragment list, then label.
bool span_less(const Span& a, const Span& b);

struct AnnotatedDocument {
  std::string doc_id;
  std::string text;  // UTF-8
  std::vector<Span> spans;
};

struct Corpus {
  std::string name;
  std::vector<AnnotatedDocument> documents;
};

/// Checks fragment bounds and per-span fragment ordering; with
/// enforce_overlap_rule also checks that spans only overlap through a
/// fragment identical in both. Gold annotations must satisfy the overlap
/// rule; system runs (e.g. exhaustive dictionary output) may not, so JSONL
/// reading validates offsets only. Throws ValidationError.
void validate_document(const AnnotatedDocument& doc, bool enforce_overlap_rule = true);
void validate_corpus(const Corpus& corpus, bool enforce_overlap_rule = true);

/// Document-level partition: shuffles doc ids with a seeded PRNG and takes
/// the first round(train_fraction * N) documents as the training set. Both
/// halves keep documents sorted by doc_id.
std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus,
                                       double train_fraction, uint64_t seed);

/// Standoff format: `ID<TAB>LABEL start end(;start end)*<TAB>surface` with
/// optional concept lines `ID<TAB>code<TAB>vocabulary`. The surface column,
/// when present, must equal the text at the given offsets (fragments joined
/// with a single space, newlines read as spaces).
AnnotatedDocument parse_standoff(const std::string& text, const std::string& ann,
                                 const std::string& doc_id = "");

/// Loads `<docid>.txt` (+ optional `<docid>.ann`) pairs from a directory.
/// Documents come back sorted by doc_id.
Corpus load_standoff_dir(const std::filesystem::path& dir);

/// JSONL interchange: one document object per line with fields doc_id, text,
/// spans[].fragments[].{start,end}, spans[].label, spans[].concept.
Corpus read_jsonl(std::istream& in, const std::string& name = "");
Corpus read_jsonl_file(const std::filesystem::path& path);
void write_jsonl(const Corpus& corpus, std::ostream& out);
void write_jsonl_file(const Corpus& corpus, const std::filesystem::path& path);

/// Loads a corpus from either a JSONL file or a standoff directory.
Corpus load_corpus(const std::filesystem::path& path);

/// Text of a span in its document: fragment substrings joined with a single
/// space.
std::string span_text(const AnnotatedDocument& doc, const Span& span);

}  // namespace medtext
