#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "medtext/corpus.hpp"

namespace medtext {

namespace {

using nlohmann::json;

json concept_to_json(const ConceptRef& c) {
  json j;
  if (c.conceptless) {
    j["conceptless"] = true;
  } else {
    j["code"] = c.code;
    j["vocabulary"] = c.vocabulary;
  }
  return j;
}

ConceptRef concept_from_json(const json& j) {
  ConceptRef c;
  c.conceptless = j.value("conceptless", false);
  if (!c.conceptless) {
    c.code = j.at("code").get<std::string>();
    c.vocabulary = j.value("vocabulary", "");
  }
  return c;
}

json document_to_json(const AnnotatedDocument& doc) {
  json spans = json::array();
  for (const Span& span : doc.spans) {
    json fragments = json::array();
    for (const Fragment& f : span.fragments)
      fragments.push_back({{"start", f.start}, {"end", f.end}});
    json s;
    s["fragments"] = std::move(fragments);
    s["label"] = std::string(to_string(span.label));
    if (span.concept_ref) s["concept"] = concept_to_json(*span.concept_ref);
    spans.push_back(std::move(s));
  }
  json j;
  j["doc_id"] = doc.doc_id;
  j["text"] = doc.text;
  j["spans"] = std::move(spans);
  return j;
}

AnnotatedDocument document_from_json(const json& j, int line_no) {
  auto where = [&] { return "line " + std::to_string(line_no) + ": "; };
  AnnotatedDocument doc;
  try {
    doc.doc_id = j.at("doc_id").get<std::string>();
    doc.text = j.at("text").get<std::string>();
    for (const json& s : j.value("spans", json::array())) {
      Span span;
      const auto label = parse_label(s.at("label").get<std::string>());
      if (!label)
        throw ParseError(where() + "unknown label " + s.at("label").dump());
      span.label = *label;
      for (const json& f : s.at("fragments"))
        span.fragments.push_back(
            {f.at("start").get<int64_t>(), f.at("end").get<int64_t>()});
      if (s.contains("concept")) span.concept_ref = concept_from_json(s["concept"]);
      doc.spans.push_back(std::move(span));
    }
  } catch (const json::exception& e) {
    throw ParseError(where() + e.what());
  }
  try {
    // System runs may carry overlapping spans; only offsets are enforced.
    validate_document(doc, /*enforce_overlap_rule=*/false);
  } catch (const ValidationError& e) {
    throw ValidationError(where() + e.what());
  }
  return doc;
}

}  // namespace

Corpus read_jsonl(std::istream& in, const std::string& name) {
  Corpus corpus{name, {}};
  std::unordered_set<std::string> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    AnnotatedDocument doc = document_from_json(j, line_no);
    if (!ids.insert(doc.doc_id).second)
      throw ValidationError("line " + std::to_string(line_no) +
                            ": duplicate doc_id " + doc.doc_id);
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

Corpus read_jsonl_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_jsonl(in, path.string());
}

void write_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const AnnotatedDocument& doc : corpus.documents)
    out << document_to_json(doc).dump() << '\n';
}

void write_jsonl_file(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open " + path.string() + " for writing");
  write_jsonl(corpus, out);
}

Corpus load_corpus(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return load_standoff_dir(path);
  return read_jsonl_file(path);
}

}  // namespace medtext
