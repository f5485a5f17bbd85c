#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "medtext/corpus.hpp"
#include "medtext/tokenizer.hpp"

namespace medtext {

/// Extended BIO tag prefixes. B/I mark continuous spans; DB/DI mark the
/// fragments of a discontinuous span; HB/HI mark a fragment shared by two or
/// more discontinuous spans.
enum class TagPrefix { O, B, I, DB, DI, HB, HI };

std::string_view to_string(TagPrefix prefix);

struct TagLabel {
  TagPrefix prefix = TagPrefix::O;
  std::optional<EntityLabel> cls;  // absent exactly for O

  std::string str() const;
  static std::optional<TagLabel> parse(std::string_view text);
  bool is_outside() const { return prefix == TagPrefix::O; }

  friend bool operator==(const TagLabel&, const TagLabel&) = default;
};

using TagSequence = std::vector<TagLabel>;

struct EncodeDiagnostics {
  int64_t collisions = 0;            // token claimed by incompatible spans
  int64_t multi_group_sentences = 0; // >1 discontinuous group of a class in one sentence
  int64_t dropped_spans = 0;         // spans projecting onto zero tokens
};

/// Tags one sentence. Every span fragment must lie inside the sentence;
/// otherwise throws ValidationError. Unencodable configurations are recorded
/// in diag and tagged best-effort.
TagSequence encode(const Sentence& sentence, const std::vector<Span>& spans,
                   EncodeDiagnostics* diag = nullptr);

struct DecodeDiagnostics {
  int64_t repaired = 0;  // orphan I/DI/HI promoted to B/DB/HB
};

/// Reconstructs spans from tags. Within a sentence and class: B/I runs become
/// continuous spans; when H fragments exist, each maximal D fragment joins
/// the H fragments to form one span; with no H fragment, all D fragments of
/// the class merge into a single discontinuous span. Adjacent tokens of one
/// span merge into a single character fragment.
std::vector<Span> decode(const Sentence& sentence, const TagSequence& tags,
                         DecodeDiagnostics* diag = nullptr);

/// Splits the document into sentences, assigns each span to the single
/// sentence containing all its fragments, and encodes. Spans crossing
/// sentence boundaries are dropped and counted in diag->dropped_spans.
std::vector<std::pair<Sentence, TagSequence>> encode_document(
    const AnnotatedDocument& doc, EncodeDiagnostics* diag = nullptr);

struct RoundTripCounts {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
};

struct RoundTripDeviation {
  std::string doc_id;
  std::vector<Span> missing;   // gold spans not reconstructed
  std::vector<Span> spurious;  // reconstructed spans not in gold
};

/// Encodes gold spans to tags and back, then scores the reconstruction
/// against gold per document (exact fragment + class match, multiset).
RoundTripCounts roundtrip_report(const Corpus& corpus,
                                 std::vector<RoundTripDeviation>* per_doc = nullptr);

/// Column file used as the CRF training/tagging format:
/// `token<TAB>start<TAB>end<TAB>tag`, blank line between sentences.
void write_conll(std::ostream& out,
                 const std::vector<std::pair<Sentence, TagSequence>>& sentences);
std::vector<std::pair<Sentence, TagSequence>> read_conll(std::istream& in);

}  // namespace medtext
