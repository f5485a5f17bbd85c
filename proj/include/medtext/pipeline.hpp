#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "medtext/corpus.hpp"
#include "medtext/eval.hpp"

namespace medtext {

/// FNV-1a over doc ids and texts in doc_id order. Identifies the corpus a
/// run was produced from so evaluations can refuse mismatched runs;
/// annotations do not enter the hash.
std::string corpus_text_hash(const Corpus& corpus);

uint64_t fnv1a64(std::string_view data, uint64_t seed = 14695981039346656037ull);

/// Written next to every pipeline output. Evaluation consumes manifests (or
/// bare span files, hashing them on the fly).
struct RunManifest {
  std::string name;
  std::string method;       // e.g. "dict+vocab.tsv", "crf", "crf+vsm"
  std::string corpus_hash;  // hex corpus_text_hash of the input corpus
  std::string spans_path;   // JSONL output, relative to the manifest
  nlohmann::json config;    // frozen config snapshot

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

/// A loaded run: manifest metadata plus its span corpus.
struct Run {
  RunManifest manifest;
  Corpus spans;
};

/// Accepts either a manifest JSON or a spans JSONL file (named after its
/// filename stem, hash computed from its own documents).
Run load_run(const std::filesystem::path& path);

/// Declarative pipeline config (JSON object):
///   name     run name (defaults to the config filename stem)
///   method   "dict" | "crf" | "crf+vsm"
///   corpus   input corpus (JSONL file or standoff directory)
///   vocab    vocabulary TSV (dict and crf+vsm)
///   label    entity class for dict matching
///   model    trained CRF model file (crf methods)
///   filter   optional concept-id filter file (crf+vsm)
///   out_dir  output directory
/// Produces <out_dir>/<name>.spans.jsonl and <out_dir>/<name>.manifest.json.
RunManifest run_pipeline(const std::filesystem::path& config_path);

struct EvaluateOptions {
  std::vector<EntityLabel> labels;  // empty = every class seen in gold
  bool relaxed_pool = false;        // also report experimental relaxed pooled accuracy
};

/// Comparative report over N runs: per run, per class, per mode blocks with
/// precision/recall/F, pooled accuracy, effectiveness and raw counts. The
/// negative pool is formed from exactly the given runs. Throws
/// IntegrityError when any run's corpus hash differs from the gold corpus.
nlohmann::json evaluate_runs(const Corpus& gold, const std::vector<Run>& runs,
                             const EvaluateOptions& options = {});

}  // namespace medtext
