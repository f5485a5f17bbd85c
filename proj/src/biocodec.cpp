#include "medtext/biocodec.hpp"

#include <algorithm>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace medtext {

std::string_view to_string(TagPrefix prefix) {
  switch (prefix) {
    case TagPrefix::O: return "O";
    case TagPrefix::B: return "B";
    case TagPrefix::I: return "I";
    case TagPrefix::DB: return "DB";
    case TagPrefix::DI: return "DI";
    case TagPrefix::HB: return "HB";
    case TagPrefix::HI: return "HI";
  }
  return "?";
}

std::string TagLabel::str() const {
  if (prefix == TagPrefix::O) return "O";
  std::string out(to_string(prefix));
  out += '-';
  out += to_string(*cls);
  return out;
}

std::optional<TagLabel> TagLabel::parse(std::string_view text) {
  if (text == "O") return TagLabel{};
  const std::size_t dash = text.find('-');
  if (dash == std::string_view::npos) return std::nullopt;
  const std::string_view prefix = text.substr(0, dash);
  const auto cls = parse_label(text.substr(dash + 1));
  if (!cls) return std::nullopt;
  for (TagPrefix p : {TagPrefix::B, TagPrefix::I, TagPrefix::DB, TagPrefix::DI,
                      TagPrefix::HB, TagPrefix::HI})
    if (prefix == to_string(p)) return TagLabel{p, cls};
  return std::nullopt;
}

namespace {

// Token indices of the sentence intersecting a fragment. Contiguous because
// tokens are ordered and non-overlapping.
std::pair<int, int> fragment_token_range(const Sentence& sentence, const Fragment& f) {
  int first = -1, last = -1;
  for (int t = 0; t < static_cast<int>(sentence.tokens.size()); ++t) {
    if (token_intersects(sentence.tokens[t], f.start, f.end)) {
      if (first < 0) first = t;
      last = t;
    }
  }
  return {first, last};
}

bool within_sentence(const Sentence& sentence, const Span& span) {
  return span.start() >= sentence.start && span.end() <= sentence.end;
}

// One character fragment covering a contiguous token run.
Fragment run_to_fragment(const Sentence& sentence, const std::vector<int>& run) {
  return {sentence.tokens[run.front()].start, sentence.tokens[run.back()].end};
}

}  // namespace

TagSequence encode(const Sentence& sentence, const std::vector<Span>& spans,
                   EncodeDiagnostics* diag) {
  EncodeDiagnostics local;
  EncodeDiagnostics& d = diag ? *diag : local;

  const int n = static_cast<int>(sentence.tokens.size());
  TagSequence tags(n);

  auto put = [&](int t, TagPrefix prefix, EntityLabel cls) {
    if (!tags[t].is_outside()) ++d.collisions;
    tags[t] = TagLabel{prefix, cls};
  };

  for (EntityLabel cls : all_labels()) {
    std::vector<const Span*> continuous, discontinuous;
    for (const Span& span : spans) {
      if (span.label != cls) continue;
      if (!within_sentence(sentence, span))
        throw ValidationError("span [" + std::to_string(span.start()) + "," +
                              std::to_string(span.end()) +
                              ") crosses the sentence boundary");
      (span.discontinuous() ? discontinuous : continuous).push_back(&span);
    }
    if (continuous.empty() && discontinuous.empty()) continue;

    for (const Span* span : continuous) {
      const auto [first, last] = fragment_token_range(sentence, span->fragments[0]);
      if (first < 0) {
        ++d.dropped_spans;
        continue;
      }
      put(first, TagPrefix::B, cls);
      for (int t = first + 1; t <= last; ++t) put(t, TagPrefix::I, cls);
    }

    if (discontinuous.empty()) continue;

    // Tokens covered by two or more discontinuous spans form the shared head.
    std::vector<int> cover(n, 0);
    bool any_tokens = false;
    for (const Span* span : discontinuous) {
      std::set<int> covered;
      for (const Fragment& f : span->fragments) {
        const auto [first, last] = fragment_token_range(sentence, f);
        for (int t = first; t >= 0 && t <= last; ++t) covered.insert(t);
      }
      if (covered.empty()) ++d.dropped_spans;
      else any_tokens = true;
      for (int t : covered) ++cover[t];
    }
    if (!any_tokens) continue;

    auto is_head = [&](int t) { return cover[t] >= 2; };

    for (int t = 0; t < n; ++t) {
      if (!is_head(t)) continue;
      const bool run_start = (t == 0) || !is_head(t - 1);
      put(t, run_start ? TagPrefix::HB : TagPrefix::HI, cls);
    }

    for (const Span* span : discontinuous) {
      for (const Fragment& f : span->fragments) {
        const auto [first, last] = fragment_token_range(sentence, f);
        bool fragment_open = false;  // previous token of this fragment was D
        for (int t = first; t >= 0 && t <= last; ++t) {
          if (cover[t] != 1) {
            fragment_open = false;  // token belongs to the head
            continue;
          }
          put(t, fragment_open ? TagPrefix::DI : TagPrefix::DB, cls);
          fragment_open = true;
        }
      }
    }

    // Count sentences holding more than one discontinuous group: connected
    // components of discontinuous spans linked by an identical fragment.
    const int m = static_cast<int>(discontinuous.size());
    std::vector<int> parent(m);
    for (int i = 0; i < m; ++i) parent[i] = i;
    std::function<int(int)> find = [&](int x) {
      return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        for (const Fragment& fa : discontinuous[i]->fragments)
          for (const Fragment& fb : discontinuous[j]->fragments)
            if (fa == fb) parent[find(i)] = find(j);
    std::set<int> roots;
    for (int i = 0; i < m; ++i) roots.insert(find(i));
    if (roots.size() > 1) ++d.multi_group_sentences;
  }

  return tags;
}

std::vector<Span> decode(const Sentence& sentence, const TagSequence& tags,
                         DecodeDiagnostics* diag) {
  if (tags.size() != sentence.tokens.size())
    throw ValidationError("tag sequence length does not match token count");
  DecodeDiagnostics local;
  DecodeDiagnostics& d = diag ? *diag : local;

  const int n = static_cast<int>(tags.size());

  // Repair pass: I/DI/HI that do not continue a compatible run are promoted
  // to their begin variant.
  TagSequence fixed = tags;
  for (int t = 0; t < n; ++t) {
    TagLabel& tag = fixed[t];
    auto prev_is = [&](std::initializer_list<TagPrefix> prefixes) {
      if (t == 0 || fixed[t - 1].is_outside()) return false;
      if (fixed[t - 1].cls != tag.cls) return false;
      for (TagPrefix p : prefixes)
        if (fixed[t - 1].prefix == p) return true;
      return false;
    };
    if (tag.prefix == TagPrefix::I && !prev_is({TagPrefix::B, TagPrefix::I})) {
      tag.prefix = TagPrefix::B;
      ++d.repaired;
    } else if (tag.prefix == TagPrefix::DI && !prev_is({TagPrefix::DB, TagPrefix::DI})) {
      tag.prefix = TagPrefix::DB;
      ++d.repaired;
    } else if (tag.prefix == TagPrefix::HI && !prev_is({TagPrefix::HB, TagPrefix::HI})) {
      tag.prefix = TagPrefix::HB;
      ++d.repaired;
    }
  }

  std::vector<Span> spans;
  for (EntityLabel cls : all_labels()) {
    // Token runs per structural unit. D fragments honor tag boundaries (DB
    // starts a fragment even next to another D run); head fragments merge by
    // token contiguity, since encode cannot represent adjacent head
    // fragments separately. Fragments never merge across units, so the
    // shared head stays an identical fragment in every expanded span.
    std::vector<std::vector<int>> cont_runs, d_runs;
    std::vector<int> head_tokens;

    for (int t = 0; t < n; ++t) {
      const TagLabel& tag = fixed[t];
      if (tag.is_outside() || tag.cls != cls) continue;
      switch (tag.prefix) {
        case TagPrefix::B:
          cont_runs.push_back({t});
          break;
        case TagPrefix::I:
          cont_runs.back().push_back(t);
          break;
        case TagPrefix::DB:
          d_runs.push_back({t});
          break;
        case TagPrefix::DI:
          d_runs.back().push_back(t);
          break;
        case TagPrefix::HB:
        case TagPrefix::HI:
          head_tokens.push_back(t);
          break;
        case TagPrefix::O:
          break;
      }
    }

    for (const std::vector<int>& run : cont_runs)
      spans.push_back(Span{{run_to_fragment(sentence, run)}, cls, std::nullopt});

    std::vector<Fragment> head_fragments;
    for (std::size_t i = 0; i < head_tokens.size(); ++i) {
      if (!head_fragments.empty() && head_tokens[i] == head_tokens[i - 1] + 1)
        head_fragments.back().end = sentence.tokens[head_tokens[i]].end;
      else
        head_fragments.push_back({sentence.tokens[head_tokens[i]].start,
                                  sentence.tokens[head_tokens[i]].end});
    }

    if (!head_fragments.empty()) {
      if (d_runs.empty()) {
        // A head with no partners cannot be expanded; emit it alone.
        spans.push_back(Span{head_fragments, cls, std::nullopt});
      } else {
        for (const std::vector<int>& run : d_runs) {
          std::vector<Fragment> fragments = head_fragments;
          fragments.push_back(run_to_fragment(sentence, run));
          std::sort(fragments.begin(), fragments.end());
          spans.push_back(Span{std::move(fragments), cls, std::nullopt});
        }
      }
    } else if (!d_runs.empty()) {
      std::vector<Fragment> fragments;
      for (const std::vector<int>& run : d_runs)
        fragments.push_back(run_to_fragment(sentence, run));
      std::sort(fragments.begin(), fragments.end());
      spans.push_back(Span{std::move(fragments), cls, std::nullopt});
    }
  }

  std::sort(spans.begin(), spans.end(), span_less);
  return spans;
}

std::vector<std::pair<Sentence, TagSequence>> encode_document(
    const AnnotatedDocument& doc, EncodeDiagnostics* diag) {
  EncodeDiagnostics local;
  EncodeDiagnostics& d = diag ? *diag : local;

  std::vector<Sentence> sentences = split_sentences(doc.text);
  std::vector<std::vector<Span>> per_sentence(sentences.size());

  for (const Span& span : doc.spans) {
    int home = -1;
    bool crosses = false;
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      bool any = false, all = true;
      for (const Fragment& f : span.fragments) {
        const bool inside = f.start >= sentences[s].start && f.end <= sentences[s].end;
        const bool touches = f.start < sentences[s].end && f.end > sentences[s].start;
        any = any || touches;
        all = all && inside;
      }
      if (any && all) home = static_cast<int>(s);
      else if (any) crosses = true;
    }
    if (home >= 0 && !crosses) {
      per_sentence[home].push_back(span);
    } else {
      ++d.dropped_spans;
    }
  }

  std::vector<std::pair<Sentence, TagSequence>> out;
  out.reserve(sentences.size());
  for (std::size_t s = 0; s < sentences.size(); ++s)
    out.emplace_back(sentences[s], encode(sentences[s], per_sentence[s], &d));
  return out;
}

RoundTripCounts roundtrip_report(const Corpus& corpus,
                                 std::vector<RoundTripDeviation>* per_doc) {
  RoundTripCounts counts;
  for (const AnnotatedDocument& doc : corpus.documents) {
    std::vector<Span> decoded;
    for (const auto& [sentence, tags] : encode_document(doc))
      for (Span& span : decode(sentence, tags))
        decoded.push_back(std::move(span));

    // Multiset comparison on (fragments, label).
    using Key = std::pair<std::vector<Fragment>, EntityLabel>;
    std::map<Key, int> gold_counts;
    for (const Span& span : doc.spans) ++gold_counts[{span.fragments, span.label}];

    RoundTripDeviation dev;
    dev.doc_id = doc.doc_id;
    for (const Span& span : decoded) {
      const Key key{span.fragments, span.label};
      auto it = gold_counts.find(key);
      if (it != gold_counts.end() && it->second > 0) {
        --it->second;
        ++counts.tp;
      } else {
        ++counts.fp;
        dev.spurious.push_back(span);
      }
    }
    for (const Span& span : doc.spans) {
      auto it = gold_counts.find({span.fragments, span.label});
      if (it->second > 0) {
        --it->second;
        ++counts.fn;
        dev.missing.push_back(span);
      }
    }
    if (per_doc && (!dev.missing.empty() || !dev.spurious.empty()))
      per_doc->push_back(std::move(dev));
  }
  return counts;
}

void write_conll(std::ostream& out,
                 const std::vector<std::pair<Sentence, TagSequence>>& sentences) {
  for (const auto& [sentence, tags] : sentences) {
    for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
      const Token& tok = sentence.tokens[t];
      out << tok.text << '\t' << tok.start << '\t' << tok.end << '\t'
          << tags[t].str() << '\n';
    }
    out << '\n';
  }
}

std::vector<std::pair<Sentence, TagSequence>> read_conll(std::istream& in) {
  std::vector<std::pair<Sentence, TagSequence>> out;
  Sentence sentence;
  TagSequence tags;
  std::string line;
  int line_no = 0;

  auto flush = [&] {
    if (sentence.tokens.empty()) return;
    sentence.start = sentence.tokens.front().start;
    sentence.end = sentence.tokens.back().end;
    out.emplace_back(std::move(sentence), std::move(tags));
    sentence = Sentence{};
    tags = TagSequence{};
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    std::istringstream fields(line);
    std::string text, tag_text;
    int64_t start = 0, end = 0;
    if (!std::getline(fields, text, '\t'))
      throw ParseError("line " + std::to_string(line_no) + ": missing token column");
    std::string start_s, end_s;
    if (!std::getline(fields, start_s, '\t') || !std::getline(fields, end_s, '\t') ||
        !std::getline(fields, tag_text))
      throw ParseError("line " + std::to_string(line_no) + ": expected 4 tab-separated columns");
    try {
      start = std::stoll(start_s);
      end = std::stoll(end_s);
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(line_no) + ": bad offsets");
    }
    const auto tag = TagLabel::parse(tag_text);
    if (!tag)
      throw ParseError("line " + std::to_string(line_no) + ": unknown tag '" + tag_text + "'");
    sentence.tokens.push_back(Token{text, start, end});
    tags.push_back(*tag);
  }
  flush();
  return out;
}

}  // namespace medtext
