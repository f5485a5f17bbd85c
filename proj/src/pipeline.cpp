#include "medtext/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "medtext/crf.hpp"
#include "medtext/dictmatch.hpp"
#include "medtext/normalize.hpp"

namespace medtext {

using nlohmann::json;

uint64_t fnv1a64(std::string_view data, uint64_t seed) {
  uint64_t hash = seed;
  for (const char c : data) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string corpus_text_hash(const Corpus& corpus) {
  std::vector<const AnnotatedDocument*> docs;
  docs.reserve(corpus.documents.size());
  for (const AnnotatedDocument& doc : corpus.documents) docs.push_back(&doc);
  std::sort(docs.begin(), docs.end(),
            [](const auto* a, const auto* b) { return a->doc_id < b->doc_id; });
  uint64_t hash = 14695981039346656037ull;
  for (const AnnotatedDocument* doc : docs) {
    hash = fnv1a64(doc->doc_id, hash);
    hash = fnv1a64(std::string_view("\x1f", 1), hash);
    hash = fnv1a64(doc->text, hash);
    hash = fnv1a64(std::string_view("\x1e", 1), hash);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

json RunManifest::to_json() const {
  json j;
  j["name"] = name;
  j["method"] = method;
  j["corpus_hash"] = corpus_hash;
  j["spans_path"] = spans_path;
  j["config"] = config;
  return j;
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.name = j.at("name").get<std::string>();
  m.method = j.at("method").get<std::string>();
  m.corpus_hash = j.at("corpus_hash").get<std::string>();
  m.spans_path = j.at("spans_path").get<std::string>();
  m.config = j.value("config", json::object());
  return m;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open " + path.string() + " for writing");
  out << manifest.to_json().dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open manifest " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return RunManifest::from_json(j);
}

Run load_run(const std::filesystem::path& path) {
  Run run;
  if (path.extension() == ".json") {
    run.manifest = read_manifest(path);
    std::filesystem::path spans = run.manifest.spans_path;
    if (spans.is_relative()) spans = path.parent_path() / spans;
    run.spans = read_jsonl_file(spans);
    const std::string actual = corpus_text_hash(run.spans);
    if (actual != run.manifest.corpus_hash)
      throw IntegrityError("run " + run.manifest.name + ": spans file hash " + actual +
                           " does not match manifest corpus hash " +
                           run.manifest.corpus_hash);
  } else {
    run.spans = read_jsonl_file(path);
    run.manifest.name = path.stem().string();
    run.manifest.method = "unknown";
    run.manifest.corpus_hash = corpus_text_hash(run.spans);
    run.manifest.spans_path = path.string();
  }
  return run;
}

namespace {

json config_from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open config " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

EntityLabel label_from_config(const json& config) {
  const std::string name = config.at("label").get<std::string>();
  const auto label = parse_label(name);
  if (!label) throw ParseError("unknown label '" + name + "' in config");
  return *label;
}

}  // namespace

RunManifest run_pipeline(const std::filesystem::path& config_path) {
  const json config = config_from_file(config_path);
  const std::string method = config.at("method").get<std::string>();
  const std::string name = config.value("name", config_path.stem().string());
  const std::filesystem::path out_dir = config.at("out_dir").get<std::string>();
  std::filesystem::create_directories(out_dir);

  const Corpus corpus = load_corpus(config.at("corpus").get<std::string>());
  if (corpus.documents.empty()) throw ValidationError("pipeline: empty corpus");

  Corpus output{corpus.name, {}};
  std::string descriptor = method;

  if (method == "dict") {
    const auto vocab_path = config.at("vocab").get<std::string>();
    const std::vector<VocabEntry> entries = load_vocab_tsv(vocab_path);
    const EntityLabel label = label_from_config(config);
    const PhraseIndex index = PhraseIndex::build(corpus);
    const std::vector<std::vector<Span>> matches =
        match_vocabulary(index, entries, label);
    for (std::size_t d = 0; d < corpus.documents.size(); ++d)
      output.documents.push_back(AnnotatedDocument{
          corpus.documents[d].doc_id, corpus.documents[d].text, matches[d]});
    descriptor = "dict+" + std::filesystem::path(vocab_path).filename().string();
  } else if (method == "crf" || method == "crf+vsm") {
    const CrfModel model = load_model(config.at("model").get<std::string>());
    output = tag_corpus(model, corpus);
    if (method == "crf+vsm") {
      const auto vocab_path = config.at("vocab").get<std::string>();
      std::optional<std::unordered_set<std::string>> filter;
      if (config.contains("filter"))
        filter = load_concept_filter(config["filter"].get<std::string>());
      const TermIndex index = TermIndex::build(load_vocab_tsv(vocab_path), filter);
      normalize_corpus(output, index);
      descriptor = "crf+vsm+" + std::filesystem::path(vocab_path).filename().string();
    }
  } else {
    throw ParseError("unknown method '" + method + "' (expected dict, crf, crf+vsm)");
  }

  RunManifest manifest;
  manifest.name = name;
  manifest.method = descriptor;
  manifest.corpus_hash = corpus_text_hash(corpus);
  manifest.spans_path = name + ".spans.jsonl";
  manifest.config = config;

  write_jsonl_file(output, out_dir / manifest.spans_path);
  write_manifest(manifest, out_dir / (name + ".manifest.json"));
  return manifest;
}

namespace {

json prf_to_json(const Prf& p) {
  json j;
  j["precision"] = p.precision;
  j["recall"] = p.recall;
  j["f_score"] = p.f_score;
  if (p.precision_zero_division) j["precision_zero_division"] = true;
  if (p.recall_zero_division) j["recall_zero_division"] = true;
  return j;
}

json counts_to_json(const EvalCounts& c) {
  json j;
  j["n_tp"] = c.n_tp;
  j["n_fp"] = c.n_fp;
  j["n_fn"] = c.n_fn;
  j["n_tn"] = c.n_tn;
  j["n_correct"] = c.n_correct;
  j["t_g"] = c.t_g;
  return j;
}

}  // namespace

json evaluate_runs(const Corpus& gold, const std::vector<Run>& runs,
                   const EvaluateOptions& options) {
  if (runs.empty()) throw ValidationError("evaluate: no runs given");

  const std::string gold_hash = corpus_text_hash(gold);
  for (const Run& run : runs)
    if (run.manifest.corpus_hash != gold_hash)
      throw IntegrityError(
          "run " + run.manifest.name + " was produced from corpus " +
          run.manifest.corpus_hash + " but the gold corpus hashes to " + gold_hash +
          "; runs can only be compared on the corpus they were produced from");

  std::vector<EntityLabel> labels = options.labels;
  if (labels.empty()) {
    std::set<EntityLabel> seen;
    for (const AnnotatedDocument& doc : gold.documents)
      for (const Span& span : doc.spans) seen.insert(span.label);
    labels.assign(seen.begin(), seen.end());
    std::sort(labels.begin(), labels.end(), [](EntityLabel a, EntityLabel b) {
      return to_string(a) < to_string(b);
    });
  }

  json report;
  report["gold"] = {{"name", gold.name}, {"corpus_hash", gold_hash}};
  json pool_runs = json::array();
  for (const Run& run : runs) pool_runs.push_back(run.manifest.name);
  report["negative_pool_runs"] = pool_runs;

  json results = json::object();
  for (const Run& run : runs)
    results[run.manifest.name] = {{"method", run.manifest.method},
                                  {"classes", json::object()}};

  std::vector<const Corpus*> run_corpora;
  for (const Run& run : runs) run_corpora.push_back(&run.spans);

  for (const EntityLabel label : labels) {
    // Strict mode with pooled accuracy.
    std::vector<EvalCounts> strict_counts;
    for (const Run& run : runs)
      strict_counts.push_back(count_matches(gold, run.spans, label, MatchMode::Strict));
    const std::vector<double> strict_acc =
        pooled_accuracy(gold, run_corpora, label, strict_counts);

    // Relaxed mode; pooled accuracy over exact identity is experimental here.
    std::vector<EvalCounts> relaxed_counts;
    for (const Run& run : runs)
      relaxed_counts.push_back(count_matches(gold, run.spans, label, MatchMode::Relaxed));
    std::vector<double> relaxed_acc;
    if (options.relaxed_pool)
      relaxed_acc = pooled_accuracy(gold, run_corpora, label, relaxed_counts);

    for (std::size_t m = 0; m < runs.size(); ++m) {
      json block;
      {
        json strict = prf_to_json(prf(strict_counts[m]));
        strict["accuracy"] = strict_acc[m];
        strict["counts"] = counts_to_json(strict_counts[m]);
        block["strict"] = std::move(strict);
      }
      {
        json relaxed = prf_to_json(prf(relaxed_counts[m]));
        if (options.relaxed_pool) {
          relaxed["accuracy"] = relaxed_acc[m];
          relaxed["accuracy_experimental"] = true;
        }
        relaxed["counts"] = counts_to_json(relaxed_counts[m]);
        block["relaxed"] = std::move(relaxed);
      }
      {
        const Effectiveness eff = effectiveness(strict_counts[m]);
        json j;
        j["strict"] = eff.strict;
        j["relaxed"] = eff.relaxed;
        if (eff.relaxed_undefined) j["relaxed_undefined"] = true;
        block["effectiveness"] = std::move(j);
      }
      {
        EvalCounts full = count_matches_full_task(gold, runs[m].spans, label);
        // The full-task pool reuses the identification pool: spans a method
        // produced that are not gold spans, under exact identity.
        full.n_tn = strict_counts[m].n_tn;
        json j = prf_to_json(prf(full));
        const int64_t denom = full.n_tp + full.n_fn + full.n_fp + full.n_tn;
        j["accuracy"] = denom == 0 ? 0.0
                                   : static_cast<double>(full.n_tp + full.n_tn) /
                                         static_cast<double>(denom);
        j["counts"] = counts_to_json(full);
        block["full_task"] = std::move(j);
      }
      results[runs[m].manifest.name]["classes"][std::string(to_string(label))] =
          std::move(block);
    }
  }
  report["runs"] = std::move(results);
  return report;
}

}  // namespace medtext
