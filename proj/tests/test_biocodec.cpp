#include <doctest.h>

#include <sstream>

#include "medtext/biocodec.hpp"
#include "testutil.hpp"

using namespace medtext;

namespace {

struct Fixture {
  std::string text;
  Sentence sentence;
};

Fixture make_sentence(const std::vector<std::string>& words) {
  Fixture f;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) f.text += ' ';
    f.text += words[i];
  }
  f.sentence.tokens = tokenize(f.text);
  f.sentence.start = 0;
  f.sentence.end = static_cast<int64_t>(utf8::length(f.text));
  REQUIRE(f.sentence.tokens.size() == words.size());
  return f;
}

// Character fragment covering tokens [first, last] of the sentence.
Fragment frag(const Sentence& s, int first, int last) {
  return {s.tokens[first].start, s.tokens[last].end};
}

std::vector<std::string> tag_strings(const TagSequence& tags) {
  std::vector<std::string> out;
  for (const TagLabel& tag : tags) out.push_back(tag.str());
  return out;
}

}  // namespace

TEST_CASE("encode: continuous span becomes B then I") {
  auto f = make_sentence({"I", "have", "severe", "pain"});
  const Span span{{frag(f.sentence, 2, 3)}, EntityLabel::ADR, std::nullopt};
  CHECK(tag_strings(encode(f.sentence, {span})) ==
        std::vector<std::string>{"O", "O", "B-ADR", "I-ADR"});
}

TEST_CASE("encode: shared fragment becomes H, partners become D") {
  auto f = make_sentence({"pain", "in", "arm", "and", "leg"});
  const Span a{{frag(f.sentence, 0, 0), frag(f.sentence, 2, 2)}, EntityLabel::ADR,
               std::nullopt};
  const Span b{{frag(f.sentence, 0, 0), frag(f.sentence, 4, 4)}, EntityLabel::ADR,
               std::nullopt};
  CHECK(tag_strings(encode(f.sentence, {a, b})) ==
        std::vector<std::string>{"HB-ADR", "O", "DB-ADR", "O", "DB-ADR"});
}

TEST_CASE("encode: lone discontinuous span uses DB per fragment") {
  auto f = make_sentence({"pain", "in", "arm"});
  const Span span{{frag(f.sentence, 0, 0), frag(f.sentence, 2, 2)}, EntityLabel::ADR,
                  std::nullopt};
  CHECK(tag_strings(encode(f.sentence, {span})) ==
        std::vector<std::string>{"DB-ADR", "O", "DB-ADR"});
}

TEST_CASE("encode: multi-token fragments of a discontinuous span get DI") {
  auto f = make_sentence({"sharp", "pain", "in", "left", "arm"});
  const Span span{{frag(f.sentence, 0, 1), frag(f.sentence, 3, 4)}, EntityLabel::ADR,
                  std::nullopt};
  CHECK(tag_strings(encode(f.sentence, {span})) ==
        std::vector<std::string>{"DB-ADR", "DI-ADR", "O", "DB-ADR", "DI-ADR"});
}

TEST_CASE("encode: span crossing the sentence boundary is an error") {
  auto f = make_sentence({"just", "pain"});
  const Span outside{{{0, 4}, {100, 105}}, EntityLabel::ADR, std::nullopt};
  CHECK_THROWS_AS(encode(f.sentence, {outside}), ValidationError);
}

TEST_CASE("decode: inverse of encode on the worked examples") {
  SUBCASE("continuous") {
    auto f = make_sentence({"I", "have", "severe", "pain"});
    const std::vector<Span> gold = {
        Span{{frag(f.sentence, 2, 3)}, EntityLabel::ADR, std::nullopt}};
    CHECK(decode(f.sentence, encode(f.sentence, gold)) == gold);
  }
  SUBCASE("shared head: HB O DB O DB gives two spans") {
    auto f = make_sentence({"pain", "in", "arm", "and", "leg"});
    const std::vector<Span> gold = {
        Span{{frag(f.sentence, 0, 0), frag(f.sentence, 2, 2)}, EntityLabel::ADR,
             std::nullopt},
        Span{{frag(f.sentence, 0, 0), frag(f.sentence, 4, 4)}, EntityLabel::ADR,
             std::nullopt}};
    CHECK(decode(f.sentence, encode(f.sentence, gold)) == gold);
  }
  SUBCASE("lone discontinuous span") {
    auto f = make_sentence({"pain", "in", "arm"});
    const std::vector<Span> gold = {
        Span{{frag(f.sentence, 0, 0), frag(f.sentence, 2, 2)}, EntityLabel::ADR,
             std::nullopt}};
    CHECK(decode(f.sentence, encode(f.sentence, gold)) == gold);
  }
}

TEST_CASE("decode: head fragment after its partners") {
  // D fragments may precede the H fragment ("arm and leg pain").
  auto f = make_sentence({"arm", "and", "leg", "pain"});
  const std::vector<Span> gold = {
      Span{{frag(f.sentence, 0, 0), frag(f.sentence, 3, 3)}, EntityLabel::ADR,
           std::nullopt},
      Span{{frag(f.sentence, 2, 2), frag(f.sentence, 3, 3)}, EntityLabel::ADR,
           std::nullopt}};
  const TagSequence tags = encode(f.sentence, gold);
  CHECK(tag_strings(tags) ==
        std::vector<std::string>{"DB-ADR", "O", "DB-ADR", "HB-ADR"});
  CHECK(decode(f.sentence, tags) == gold);
}

TEST_CASE("decode: two separate discontinuous spans merge (known loss)") {
  auto f = make_sentence({"w0", "w1", "w2", "w3", "w4", "w5", "w6"});
  const std::vector<Span> gold = {
      Span{{frag(f.sentence, 0, 0), frag(f.sentence, 2, 2)}, EntityLabel::ADR,
           std::nullopt},
      Span{{frag(f.sentence, 4, 4), frag(f.sentence, 6, 6)}, EntityLabel::ADR,
           std::nullopt}};
  EncodeDiagnostics diag;
  const TagSequence tags = encode(f.sentence, gold, &diag);
  CHECK(diag.multi_group_sentences == 1);
  const std::vector<Span> decoded = decode(f.sentence, tags);
  REQUIRE(decoded.size() == 1);
  CHECK(decoded[0].fragments ==
        std::vector<Fragment>{frag(f.sentence, 0, 0), frag(f.sentence, 2, 2),
                              frag(f.sentence, 4, 4), frag(f.sentence, 6, 6)});
}

TEST_CASE("decode: orphan I/DI/HI are repaired with a diagnostic") {
  auto f = make_sentence({"a", "b", "c"});
  TagSequence tags = {TagLabel{}, TagLabel{TagPrefix::I, EntityLabel::ADR}, TagLabel{}};
  DecodeDiagnostics diag;
  const auto spans = decode(f.sentence, tags, &diag);
  CHECK(diag.repaired == 1);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0].fragments == std::vector<Fragment>{frag(f.sentence, 1, 1)});

  // I continuing a different class is also an orphan.
  tags = {TagLabel{TagPrefix::B, EntityLabel::Drug},
          TagLabel{TagPrefix::I, EntityLabel::ADR}, TagLabel{}};
  DecodeDiagnostics diag2;
  const auto spans2 = decode(f.sentence, tags, &diag2);
  CHECK(diag2.repaired == 1);
  CHECK(spans2.size() == 2);
}

TEST_CASE("decode after decode-encode is idempotent") {
  tests::Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> words;
    const int n = tests::rand_int(rng, 3, 9);
    for (int i = 0; i < n; ++i) words.push_back(tests::rand_word(rng));
    auto f = make_sentence(words);

    // Random plausible tag sequence (possibly malformed).
    TagSequence tags(words.size());
    for (auto& tag : tags) {
      const int pick = tests::rand_int(rng, 0, 6);
      if (pick == 0) tag = TagLabel{};
      else
        tag = TagLabel{static_cast<TagPrefix>(pick),
                       pick % 2 ? EntityLabel::ADR : EntityLabel::Drug};
    }
    const std::vector<Span> first = decode(f.sentence, tags);
    const TagSequence reencoded = encode(f.sentence, first);
    const std::vector<Span> second = decode(f.sentence, reencoded);
    CHECK(first == second);
  }
}

TEST_CASE("roundtrip_report: continuous-only corpus is lossless") {
  Corpus corpus{"c", {}};
  AnnotatedDocument doc;
  doc.doc_id = "d1";
  doc.text = "severe pain in the morning. headache all day.";
  doc.spans = {Span{{{7, 11}}, EntityLabel::ADR, std::nullopt},
               Span{{{28, 36}}, EntityLabel::ADR, std::nullopt}};
  corpus.documents.push_back(doc);

  const RoundTripCounts counts = roundtrip_report(corpus);
  CHECK(counts.tp == 2);
  CHECK(counts.fp == 0);
  CHECK(counts.fn == 0);
}

TEST_CASE("roundtrip_report: tp + fn equals the gold span count") {
  Corpus corpus{"c", {}};
  AnnotatedDocument doc;
  doc.doc_id = "d1";
  // Two discontinuous spans without a shared fragment in one sentence: lossy.
  doc.text = "aa bb cc dd ee ff gg";
  doc.spans = {Span{{{0, 2}, {6, 8}}, EntityLabel::ADR, std::nullopt},
               Span{{{12, 14}, {18, 20}}, EntityLabel::ADR, std::nullopt}};
  corpus.documents.push_back(doc);

  std::vector<RoundTripDeviation> deviations;
  const RoundTripCounts counts = roundtrip_report(corpus, &deviations);
  CHECK(counts.tp + counts.fn == 2);
  CHECK(counts.fn == 2);  // both gold spans lost
  CHECK(counts.fp == 1);  // one merged span appears instead
  REQUIRE(deviations.size() == 1);
  CHECK(deviations[0].doc_id == "d1");
  CHECK(deviations[0].missing.size() == 2);
  CHECK(deviations[0].spurious.size() == 1);
}

TEST_CASE("encode_document drops spans crossing sentence boundaries") {
  AnnotatedDocument doc;
  doc.doc_id = "d";
  doc.text = "pain here. more pain";
  doc.spans = {Span{{{0, 4}, {16, 20}}, EntityLabel::ADR, std::nullopt}};
  EncodeDiagnostics diag;
  const auto tagged = encode_document(doc, &diag);
  CHECK(diag.dropped_spans == 1);
  for (const auto& [sentence, tags] : tagged)
    for (const TagLabel& tag : tags) CHECK(tag.is_outside());
}

TEST_CASE("conll round-trip") {
  AnnotatedDocument doc;
  doc.doc_id = "d";
  doc.text = "severe pain in arm. took Lipitor daily.";
  doc.spans = {Span{{{0, 11}}, EntityLabel::ADR, std::nullopt},
               Span{{{25, 32}}, EntityLabel::Drug, std::nullopt}};
  const auto tagged = encode_document(doc);

  std::stringstream stream;
  write_conll(stream, tagged);
  const auto back = read_conll(stream);
  REQUIRE(back.size() == tagged.size());
  for (std::size_t s = 0; s < tagged.size(); ++s) {
    CHECK(back[s].first.tokens == tagged[s].first.tokens);
    CHECK(back[s].second == tagged[s].second);
  }
}

TEST_CASE("tag label parsing") {
  CHECK(TagLabel::parse("O") == TagLabel{});
  CHECK(TagLabel::parse("B-ADR") == TagLabel{TagPrefix::B, EntityLabel::ADR});
  CHECK(TagLabel::parse("DI-Drug") == TagLabel{TagPrefix::DI, EntityLabel::Drug});
  CHECK(!TagLabel::parse("Q-ADR").has_value());
  CHECK(!TagLabel::parse("B-Nope").has_value());
  CHECK(!TagLabel::parse("B").has_value());
}
