#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "medtext/corpus.hpp"
#include "medtext/utf8.hpp"

namespace medtext {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (true) {
    const std::size_t tab = line.find('\t', pos);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  return fields;
}

// Parses `LABEL start end(;start end)*`. Returns nullopt if the field does
// not have that shape at all (so the caller can treat the line as a concept
// mapping); throws ParseError on a malformed fragment list.
std::optional<std::pair<EntityLabel, std::vector<Fragment>>> parse_span_field(
    const std::string& field, int line_no) {
  const std::size_t space = field.find(' ');
  if (space == std::string::npos) return std::nullopt;
  const auto label = parse_label(field.substr(0, space));
  if (!label) return std::nullopt;

  std::vector<Fragment> fragments;
  std::istringstream rest(field.substr(space + 1));
  std::string piece;
  while (std::getline(rest, piece, ';')) {
    std::istringstream nums(piece);
    int64_t start = 0, end = 0;
    if (!(nums >> start >> end) || !(nums >> std::ws).eof())
      throw ParseError("line " + std::to_string(line_no) +
                       ": malformed fragment offsets '" + piece + "'");
    if (start < 0 || start >= end)
      throw ParseError("line " + std::to_string(line_no) + ": fragment [" +
                       std::to_string(start) + "," + std::to_string(end) +
                       ") has start >= end");
    fragments.push_back({start, end});
  }
  if (fragments.empty())
    throw ParseError("line " + std::to_string(line_no) + ": span with no fragments");
  return std::make_pair(*label, fragments);
}

std::string flatten_newlines(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

}  // namespace

AnnotatedDocument parse_standoff(const std::string& text, const std::string& ann,
                                 const std::string& doc_id) {
  AnnotatedDocument doc;
  doc.doc_id = doc_id;
  doc.text = text;
  const int64_t text_len = static_cast<int64_t>(utf8::length(text));

  std::map<std::string, std::size_t> span_index;  // span id -> index in doc.spans
  std::vector<std::tuple<std::string, std::string, std::string, int>> concept_lines;

  std::istringstream lines(ann);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() < 2 || fields[0].empty())
      throw ParseError("line " + std::to_string(line_no) + ": expected at least two tab-separated fields");

    const auto span_field = parse_span_field(fields[1], line_no);
    if (span_field) {
      if (fields.size() > 3)
        throw ParseError("line " + std::to_string(line_no) + ": too many fields for a span line");
      if (span_index.count(fields[0]))
        throw ParseError("line " + std::to_string(line_no) + ": duplicate span id " + fields[0]);

      Span span;
      span.label = span_field->first;
      span.fragments = span_field->second;
      for (const Fragment& f : span.fragments)
        if (f.end > text_len)
          throw ParseError("line " + std::to_string(line_no) + ": fragment end " +
                           std::to_string(f.end) + " past end of text (" +
                           std::to_string(text_len) + " characters)");

      if (fields.size() == 3 && !fields[2].empty()) {
        std::string expected;
        for (std::size_t i = 0; i < span.fragments.size(); ++i) {
          if (i > 0) expected += ' ';
          expected += utf8::substr(text, static_cast<std::size_t>(span.fragments[i].start),
                                   static_cast<std::size_t>(span.fragments[i].end));
        }
        if (flatten_newlines(expected) != flatten_newlines(fields[2]))
          throw IntegrityError("line " + std::to_string(line_no) + ": surface text '" +
                               fields[2] + "' does not match text at offsets ('" +
                               expected + "')");
      }
      span_index[fields[0]] = doc.spans.size();
      doc.spans.push_back(std::move(span));
    } else {
      // Concept mapping line: ID, code, vocabulary.
      if (fields.size() != 3)
        throw ParseError("line " + std::to_string(line_no) +
                         ": not a span line and not a 3-field concept line");
      concept_lines.emplace_back(fields[0], fields[1], fields[2], line_no);
    }
  }

  for (const auto& [id, code, vocab, cl_line] : concept_lines) {
    const auto it = span_index.find(id);
    if (it == span_index.end())
      throw ParseError("line " + std::to_string(cl_line) +
                       ": concept mapping for unknown span id " + id);
    Span& span = doc.spans[it->second];
    if (iequals(code, "concept_less"))
      span.concept_ref = ConceptRef::concept_less();
    else
      span.concept_ref = ConceptRef{code, vocab, false};
  }

  std::sort(doc.spans.begin(), doc.spans.end(), span_less);
  validate_document(doc);
  return doc;
}

Corpus load_standoff_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw ParseError("not a directory: " + dir.string());

  std::vector<fs::path> txt_files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      txt_files.push_back(entry.path());
  std::sort(txt_files.begin(), txt_files.end());

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ParseError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  Corpus corpus{dir.string(), {}};
  for (const fs::path& txt : txt_files) {
    const std::string text = slurp(txt);
    fs::path ann = txt;
    ann.replace_extension(".ann");
    std::string ann_text;
    if (fs::exists(ann)) ann_text = slurp(ann);
    try {
      corpus.documents.push_back(parse_standoff(text, ann_text, txt.stem().string()));
    } catch (const Error& e) {
      throw ParseError(txt.stem().string() + ": " + e.what());
    }
  }
  validate_corpus(corpus);
  return corpus;
}

}  // namespace medtext
