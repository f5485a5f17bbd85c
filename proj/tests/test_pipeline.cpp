#include <doctest.h>

#include <fstream>
#include <sstream>

#include "medtext/crf.hpp"
#include "medtext/dictmatch.hpp"
#include "medtext/normalize.hpp"
#include "medtext/pipeline.hpp"
#include "testutil.hpp"

using namespace medtext;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Corpus sample_corpus() {
  Corpus corpus{"sample", {}};
  corpus.documents.push_back(
      {"p1", "Took Lipitor and got severe knee pain. Stopped it.",
       {Span{{{5, 12}}, EntityLabel::Drug, ConceptRef{"A1", "AMT", false}},
        Span{{{21, 37}}, EntityLabel::ADR, ConceptRef{"S1", "SCT", false}}}});
  corpus.documents.push_back(
      {"p2", "lipitor gave me headaches daily",
       {Span{{{0, 7}}, EntityLabel::Drug, ConceptRef{"A1", "AMT", false}},
        Span{{{16, 25}}, EntityLabel::ADR, ConceptRef{"S2", "SCT", false}}}});
  return corpus;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("corpus hash covers ids and texts, not annotations") {
  Corpus a = sample_corpus();
  Corpus b = sample_corpus();
  b.documents[0].spans.clear();  // annotations differ
  CHECK(corpus_text_hash(a) == corpus_text_hash(b));
  b.documents[0].text += "!";
  CHECK(corpus_text_hash(a) != corpus_text_hash(b));
}

TEST_CASE("manifest round-trip") {
  TempDir dir("medtext_manifest_test");
  RunManifest manifest;
  manifest.name = "runA";
  manifest.method = "dict+vocab.tsv";
  manifest.corpus_hash = "00ff";
  manifest.spans_path = "runA.spans.jsonl";
  manifest.config = {{"method", "dict"}};
  write_manifest(manifest, dir.path / "m.json");
  const RunManifest back = read_manifest(dir.path / "m.json");
  CHECK(back.name == manifest.name);
  CHECK(back.method == manifest.method);
  CHECK(back.corpus_hash == manifest.corpus_hash);
  CHECK(back.spans_path == manifest.spans_path);
}

TEST_CASE("dict pipeline produces spans, manifest, and is byte-deterministic") {
  TempDir dir("medtext_pipeline_test");
  write_jsonl_file(sample_corpus(), dir.path / "corpus.jsonl");
  {
    std::ofstream vocab(dir.path / "vocab.tsv");
    vocab << "S1\tknee pain\tSCT\n";
    vocab << "S2\tsevere knee pain\tSCT\n";
    vocab << "S3\theadaches\tSCT\n";
  }
  const json config = {{"method", "dict"},
                       {"name", "dictrun"},
                       {"corpus", (dir.path / "corpus.jsonl").string()},
                       {"vocab", (dir.path / "vocab.tsv").string()},
                       {"label", "ADR"},
                       {"out_dir", dir.path.string()}};
  {
    std::ofstream out(dir.path / "config.json");
    out << config.dump();
  }

  const RunManifest m1 = run_pipeline(dir.path / "config.json");
  const std::string first = slurp(dir.path / m1.spans_path);
  const RunManifest m2 = run_pipeline(dir.path / "config.json");
  const std::string second = slurp(dir.path / m2.spans_path);
  CHECK(first == second);  // byte-identical rerun

  const Run run = load_run(dir.path / "dictrun.manifest.json");
  CHECK(run.manifest.method == "dict+vocab.tsv");
  int spans = 0;
  for (const auto& doc : run.spans.documents) spans += static_cast<int>(doc.spans.size());
  CHECK(spans >= 2);  // knee pain + severe knee pain overlap + headaches
}

TEST_CASE("evaluate_runs: hash guard refuses mismatched corpora") {
  const Corpus gold = sample_corpus();
  Run run;
  run.manifest.name = "other";
  run.manifest.corpus_hash = "deadbeef00000000";
  run.spans = gold;
  CHECK_THROWS_AS(evaluate_runs(gold, {run}), IntegrityError);
}

TEST_CASE("evaluate_runs: report structure and pooled accuracy per run") {
  const Corpus gold = sample_corpus();

  Run perfect;
  perfect.manifest.name = "perfect";
  perfect.manifest.corpus_hash = corpus_text_hash(gold);
  perfect.spans = gold;

  Run noisy;
  noisy.manifest.name = "noisy";
  noisy.manifest.corpus_hash = corpus_text_hash(gold);
  noisy.spans = gold;
  noisy.spans.documents[0].spans.push_back(
      Span{{{39, 46}}, EntityLabel::ADR, std::nullopt});  // spurious span
  noisy.spans.documents[1].spans.erase(noisy.spans.documents[1].spans.begin() + 1);

  const json report = evaluate_runs(gold, {perfect, noisy});
  CHECK(report["negative_pool_runs"].size() == 2);

  const json& p = report["runs"]["perfect"]["classes"]["ADR"];
  CHECK(p["strict"]["precision"].get<double>() == 1.0);
  CHECK(p["strict"]["recall"].get<double>() == 1.0);
  CHECK(p["strict"]["accuracy"].get<double>() == 1.0);
  CHECK(p["effectiveness"]["strict"].get<double>() == 1.0);
  CHECK(p["full_task"]["precision"].get<double>() == 1.0);

  const json& n = report["runs"]["noisy"]["classes"]["ADR"];
  // gold ADR spans: 2. noisy: hits p1 span, misses p2 span, adds 1 spurious.
  // pool = {spurious}; tp=1 fn=1 fp=1 tn=0 -> accuracy 1/3.
  CHECK(n["strict"]["counts"]["n_tp"].get<int>() == 1);
  CHECK(n["strict"]["counts"]["n_fn"].get<int>() == 1);
  CHECK(n["strict"]["counts"]["n_fp"].get<int>() == 1);
  CHECK(n["strict"]["accuracy"].get<double>() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("end-to-end: dict-match then normalize then evaluate, deterministic") {
  TempDir dir("medtext_e2e_test");
  const Corpus gold = sample_corpus();
  write_jsonl_file(gold, dir.path / "gold.jsonl");
  {
    std::ofstream vocab(dir.path / "vocab.tsv");
    vocab << "S1\tknee pain\tSCT\n"
          << "S2\theadaches\tSCT\n"
          << "S9\tsevere knee pain\tSCT\n";
  }

  auto run_once = [&](const std::string& suffix) {
    const PhraseIndex index = PhraseIndex::build(gold);
    const auto matches =
        match_vocabulary(index, load_vocab_tsv(dir.path / "vocab.tsv"), EntityLabel::ADR);
    Corpus out{gold.name, {}};
    for (std::size_t d = 0; d < gold.documents.size(); ++d)
      out.documents.push_back(
          {gold.documents[d].doc_id, gold.documents[d].text, matches[d]});
    const TermIndex terms = TermIndex::build(load_vocab_tsv(dir.path / "vocab.tsv"));
    normalize_corpus(out, terms);
    write_jsonl_file(out, dir.path / ("spans" + suffix + ".jsonl"));

    Run run = load_run(dir.path / ("spans" + suffix + ".jsonl"));
    run.manifest.name = "dictvsm";
    const json report = evaluate_runs(gold, {run});
    std::ofstream report_out(dir.path / ("report" + suffix + ".json"), std::ios::binary);
    report_out << report.dump(2);
  };

  run_once("1");
  run_once("2");
  CHECK(slurp(dir.path / "spans1.jsonl") == slurp(dir.path / "spans2.jsonl"));
  CHECK(slurp(dir.path / "report1.json") == slurp(dir.path / "report2.json"));
}

TEST_CASE("crf+vsm pipeline method chains tagging and normalization") {
  TempDir dir("medtext_crfvsm_test");

  // Tiny trainable corpus: drug names from a fixed list.
  tests::Rng rng(3);
  Corpus corpus{"c", {}};
  const std::vector<std::string> drugs = {"lipitorq", "voltarenq", "zyrtecq"};
  const std::vector<std::string> codes = {"A100", "A200", "A300"};
  for (int d = 0; d < 30; ++d) {
    std::string text;
    std::vector<Span> spans;
    int64_t offset = 0;
    for (int t = 0; t < 8; ++t) {
      const int pick = tests::rand_int(rng, 0, 2);
      std::string word = (t == 3 || t == 6)
                             ? drugs[static_cast<std::size_t>(pick)]
                             : tests::rand_word(rng, 3, 6) + "f";
      if (t > 0) {
        text += ' ';
        ++offset;
      }
      const int64_t start = offset;
      text += word;
      offset += static_cast<int64_t>(word.size());
      if (t == 3 || t == 6)
        spans.push_back(Span{{{start, offset}},
                             EntityLabel::Drug,
                             ConceptRef{codes[static_cast<std::size_t>(pick)], "AMT",
                                        false}});
    }
    corpus.documents.push_back({"doc" + std::to_string(100 + d), text, spans});
  }
  write_jsonl_file(corpus, dir.path / "corpus.jsonl");

  CrfConfig config;
  config.max_iterations = 40;
  const CrfModel model = train_crf(corpus, config);
  save_model(model, dir.path / "model.crf");

  {
    std::ofstream vocab(dir.path / "amt.tsv");
    vocab << "A100\tlipitorq\tAMT\n"
          << "A200\tvoltarenq\tAMT\n"
          << "A300\tzyrtecq\tAMT\n";
  }
  const json config_json = {{"method", "crf+vsm"},
                            {"name", "crfvsm"},
                            {"corpus", (dir.path / "corpus.jsonl").string()},
                            {"model", (dir.path / "model.crf").string()},
                            {"vocab", (dir.path / "amt.tsv").string()},
                            {"out_dir", dir.path.string()}};
  {
    std::ofstream out(dir.path / "run.json");
    out << config_json.dump();
  }
  run_pipeline(dir.path / "run.json");

  const Run run = load_run(dir.path / "crfvsm.manifest.json");
  int with_concept = 0, total = 0;
  for (const auto& doc : run.spans.documents)
    for (const auto& span : doc.spans) {
      ++total;
      if (span.concept_ref && !span.concept_ref->conceptless) ++with_concept;
    }
  CHECK(total > 0);
  CHECK(with_concept == total);  // every tagged drug has an exact synonym

  const json report = evaluate_runs(corpus, {run});
  const json& block = report["runs"]["crfvsm"]["classes"]["Drug"];
  CHECK(block["strict"]["f_score"].get<double>() > 0.9);
  CHECK(block["effectiveness"]["strict"].get<double>() > 0.9);
}

TEST_CASE("pipeline config errors") {
  TempDir dir("medtext_config_err_test");
  {
    std::ofstream out(dir.path / "bad.json");
    out << R"({"method":"teleport","corpus":"x","out_dir":")" << dir.path.string()
        << R"("})";
  }
  CHECK_THROWS_AS(run_pipeline(dir.path / "bad.json"), Error);
}
