// medtext command-line toolkit: concept identification, normalization and
// evaluation for annotated forum-post corpora.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "medtext/biocodec.hpp"
#include "medtext/corpus.hpp"
#include "medtext/crf.hpp"
#include "medtext/dictmatch.hpp"
#include "medtext/eval.hpp"
#include "medtext/normalize.hpp"
#include "medtext/pipeline.hpp"
#include "medtext/tokenizer.hpp"
#include "medtext/utf8.hpp"

namespace {

using namespace medtext;
using nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::string read_stream_or_file(const std::string& path) {
  if (path.empty() || path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw ParseError("cannot open " + path + " for writing");
  return file;
}

EntityLabel parse_label_or_throw(const std::string& name) {
  const auto label = parse_label(name);
  if (!label) throw ParseError("unknown label '" + name + "'");
  return *label;
}

MatchMode parse_mode(const std::string& name) {
  if (name == "strict") return MatchMode::Strict;
  if (name == "relaxed") return MatchMode::Relaxed;
  throw ParseError("unknown mode '" + name + "' (expected strict or relaxed)");
}

int cmd_tokenize(const std::string& input, const std::string& out_path) {
  const std::string text = read_stream_or_file(input);
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  for (const Token& tok : tokenize(text))
    out << tok.text << '\t' << tok.start << '\t' << tok.end << '\n';
  return 0;
}

int cmd_split(const std::string& corpus_path, double fraction, uint64_t seed,
              const std::string& train_out, const std::string& test_out) {
  const Corpus corpus = load_corpus(corpus_path);
  const auto [train, test] = split_corpus(corpus, fraction, seed);
  write_jsonl_file(train, train_out);
  write_jsonl_file(test, test_out);
  std::cout << "train " << train.documents.size() << " documents, test "
            << test.documents.size() << " documents\n";
  return 0;
}

int cmd_dict_match(const std::string& corpus_path, const std::string& vocab_path,
                   const std::string& label_name, const std::string& out_path) {
  const Corpus corpus = load_corpus(corpus_path);
  const EntityLabel label = parse_label_or_throw(label_name);
  const PhraseIndex index = PhraseIndex::build(corpus);
  const auto matches = match_vocabulary(index, load_vocab_tsv(vocab_path), label);

  Corpus output{corpus.name, {}};
  for (std::size_t d = 0; d < corpus.documents.size(); ++d)
    output.documents.push_back(AnnotatedDocument{corpus.documents[d].doc_id,
                                                 corpus.documents[d].text, matches[d]});
  write_jsonl_file(output, out_path);
  return 0;
}

int cmd_crf_train(const std::string& corpus_path, const std::string& out_path,
                  const CrfConfig& config, const std::string& conll_export) {
  Corpus corpus;
  if (corpus_path.size() > 6 &&
      corpus_path.substr(corpus_path.size() - 6) == ".conll") {
    // Pre-tagged column file: reconstruct one synthetic document per sentence
    // block so training sees the same tokens and tags.
    std::ifstream in(corpus_path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + corpus_path);
    const auto sentences = read_conll(in);
    corpus.name = corpus_path;
    int doc_no = 0;
    for (const auto& [sentence, tags] : sentences) {
      AnnotatedDocument doc;
      doc.doc_id = "conll-" + std::to_string(doc_no++);
      std::u32string text32;
      // Rebuild a minimal text with the original in-sentence offsets.
      int64_t cursor = 0;
      const int64_t base = sentence.tokens.front().start;
      for (const Token& tok : sentence.tokens) {
        const int64_t rel = tok.start - base;
        while (cursor < rel) {
          text32.push_back(U' ');
          ++cursor;
        }
        for (char32_t c : utf8::decode(tok.text)) text32.push_back(c);
        cursor = tok.end - base;
      }
      doc.text = utf8::encode(text32);
      Sentence shifted = sentence;
      for (Token& tok : shifted.tokens) {
        tok.start -= base;
        tok.end -= base;
      }
      shifted.start = 0;
      shifted.end = static_cast<int64_t>(text32.size());
      for (Span& span : decode(shifted, tags)) doc.spans.push_back(std::move(span));
      std::sort(doc.spans.begin(), doc.spans.end(), span_less);
      corpus.documents.push_back(std::move(doc));
    }
  } else {
    corpus = load_corpus(corpus_path);
  }

  if (!conll_export.empty()) {
    std::ofstream out(conll_export, std::ios::binary);
    if (!out) throw ParseError("cannot open " + conll_export + " for writing");
    for (const AnnotatedDocument& doc : corpus.documents)
      write_conll(out, encode_document(doc));
  }

  TrainStats stats;
  const CrfModel model = train_crf(corpus, config, &stats);
  save_model(model, out_path);
  std::cout << "trained on " << corpus.documents.size() << " documents: "
            << stats.iterations << " iterations, final NLL " << stats.final_nll
            << ", gradient norm " << stats.gradient_norm << '\n';
  return 0;
}

int cmd_crf_tag(const std::string& model_path, const std::string& corpus_path,
                const std::string& out_path) {
  const CrfModel model = load_model(model_path);
  const Corpus corpus = load_corpus(corpus_path);
  DecodeDiagnostics diag;
  const Corpus tagged = tag_corpus(model, corpus, &diag);
  write_jsonl_file(tagged, out_path);
  if (diag.repaired > 0)
    std::cerr << "repaired " << diag.repaired << " inconsistent tags\n";
  return 0;
}

int cmd_normalize(const std::string& vocab_path, const std::string& filter_path,
                  const std::string& spans_path, const std::string& out_path) {
  std::optional<std::unordered_set<std::string>> filter;
  if (!filter_path.empty()) filter = load_concept_filter(filter_path);
  const TermIndex index = TermIndex::build(load_vocab_tsv(vocab_path), filter);
  Corpus corpus = read_jsonl_file(spans_path);
  normalize_corpus(corpus, index);
  write_jsonl_file(corpus, out_path);
  return 0;
}

int cmd_evaluate(const std::string& gold_path, const std::vector<std::string>& run_paths,
                 const std::string& label_name, bool relaxed_pool,
                 const std::string& out_path) {
  const Corpus gold = load_corpus(gold_path);
  std::vector<Run> runs;
  for (const std::string& path : run_paths) runs.push_back(load_run(path));

  EvaluateOptions options;
  options.relaxed_pool = relaxed_pool;
  if (!label_name.empty()) options.labels.push_back(parse_label_or_throw(label_name));

  const json report = evaluate_runs(gold, runs, options);
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  out << report.dump(2) << '\n';
  return 0;
}

int cmd_mcnemar(const std::string& gold_path, const std::string& run1_path,
                const std::string& run2_path, const std::string& label_name,
                const std::string& mode_name) {
  const Corpus gold = load_corpus(gold_path);
  const Run run1 = load_run(run1_path);
  const Run run2 = load_run(run2_path);
  const EntityLabel label = parse_label_or_throw(label_name);
  const MatchMode mode = parse_mode(mode_name);

  const Contingency table = mcnemar_table(gold, run1.spans, run2.spans, label, mode);
  std::cout << "                 " << run2.manifest.name << "\n";
  std::cout << "                 correct  wrong\n";
  std::cout << run1.manifest.name << " correct  " << table.a << "  " << table.b << "\n";
  std::cout << run1.manifest.name << " wrong    " << table.c << "  " << table.d << "\n";
  if (table.b + table.c == 0) {
    std::cerr << "mcnemar: b + c = 0, test undefined\n";
    return kExitData;
  }
  const McNemarResult result = mcnemar(table.b, table.c);
  std::cout << "chi2 = " << result.statistic << "\n";
  std::cout << "p    = " << result.p_value << "\n";
  std::cout << (result.significant ? "significant at p < 0.01\n"
                                   : "not significant at p < 0.01\n");
  return 0;
}

int cmd_roundtrip(const std::string& corpus_path, bool per_doc) {
  const Corpus corpus = load_corpus(corpus_path);
  std::vector<RoundTripDeviation> deviations;
  const RoundTripCounts counts =
      roundtrip_report(corpus, per_doc ? &deviations : nullptr);
  std::cout << "TP " << counts.tp << "\nFP " << counts.fp << "\nFN " << counts.fn
            << "\n";
  if (per_doc) {
    for (const RoundTripDeviation& dev : deviations) {
      std::cout << dev.doc_id << ":\n";
      for (const Span& span : dev.missing) {
        std::cout << "  missing " << to_string(span.label);
        for (const Fragment& f : span.fragments)
          std::cout << ' ' << f.start << '-' << f.end;
        std::cout << '\n';
      }
      for (const Span& span : dev.spurious) {
        std::cout << "  spurious " << to_string(span.label);
        for (const Fragment& f : span.fragments)
          std::cout << ' ' << f.start << '-' << f.end;
        std::cout << '\n';
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concept identification, normalization and evaluation for medical forum text"};
  app.require_subcommand(1);

  // tokenize
  std::string tok_input = "-", tok_out = "-";
  auto* tokenize_cmd = app.add_subcommand("tokenize", "Tokenize text to TSV (token, start, end)");
  tokenize_cmd->add_option("input", tok_input, "Text file, or - for stdin");
  tokenize_cmd->add_option("--out", tok_out, "Output path, - for stdout");

  // split
  std::string split_corpus_path, split_train, split_test;
  double split_fraction = 0.7;
  uint64_t split_seed = 13;
  auto* split_cmd = app.add_subcommand("split", "Split a corpus into train and test sets");
  split_cmd->add_option("--corpus", split_corpus_path)->required();
  split_cmd->add_option("--fraction", split_fraction, "Training fraction (default 0.7)");
  split_cmd->add_option("--seed", split_seed, "Shuffle seed (default 13)");
  split_cmd->add_option("--train-out", split_train)->required();
  split_cmd->add_option("--test-out", split_test)->required();

  // dict-match
  std::string dict_corpus, dict_vocab, dict_label = "ADR", dict_out;
  auto* dict_cmd = app.add_subcommand("dict-match", "Dictionary phrase matching over a corpus");
  dict_cmd->add_option("--corpus", dict_corpus)->required();
  dict_cmd->add_option("--vocab", dict_vocab)->required();
  dict_cmd->add_option("--label", dict_label, "Entity class for emitted spans");
  dict_cmd->add_option("--out", dict_out)->required();

  // crf-train
  std::string train_corpus, train_out, train_conll_export, train_classes;
  CrfConfig train_config;
  auto* train_cmd = app.add_subcommand("crf-train", "Train the sequence tagger");
  train_cmd->add_option("--corpus", train_corpus, "Corpus (JSONL, standoff dir, or .conll)")->required();
  train_cmd->add_option("--out", train_out, "Model output path")->required();
  train_cmd->add_option("--window", train_config.window, "Word window radius (default 2)");
  train_cmd->add_option("--l2", train_config.l2, "L2 strength (default 1.0)");
  train_cmd->add_option("--max-iterations", train_config.max_iterations);
  train_cmd->add_option("--tolerance", train_config.tolerance);
  train_cmd->add_option("--classes", train_classes, "Comma-separated class filter (default: all)");
  train_cmd->add_option("--export-conll", train_conll_export, "Also write the tagged training file");

  // crf-tag
  std::string tag_model, tag_corpus_path, tag_out;
  auto* tag_cmd = app.add_subcommand("crf-tag", "Tag a corpus with a trained model");
  tag_cmd->add_option("--model", tag_model)->required();
  tag_cmd->add_option("--corpus", tag_corpus_path)->required();
  tag_cmd->add_option("--out", tag_out)->required();

  // normalize
  std::string norm_vocab, norm_filter, norm_spans, norm_out;
  auto* norm_cmd = app.add_subcommand("normalize", "Map span texts to vocabulary concepts");
  norm_cmd->add_option("--vocab", norm_vocab)->required();
  norm_cmd->add_option("--filter", norm_filter, "Concept-id filter file");
  norm_cmd->add_option("--spans", norm_spans)->required();
  norm_cmd->add_option("--out", norm_out)->required();

  // evaluate
  std::string eval_gold, eval_label, eval_out = "-";
  std::vector<std::string> eval_runs;
  bool eval_relaxed_pool = false;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score runs against a gold corpus");
  eval_cmd->add_option("--gold", eval_gold)->required();
  eval_cmd->add_option("runs", eval_runs, "Run manifests or span JSONL files")->required();
  eval_cmd->add_option("--label", eval_label, "Restrict to one entity class");
  eval_cmd->add_flag("--relaxed-pool", eval_relaxed_pool,
                     "Also report experimental relaxed-mode pooled accuracy");
  eval_cmd->add_option("--out", eval_out, "Report path, - for stdout");

  // mcnemar
  std::string mc_gold, mc_run1, mc_run2, mc_label = "ADR", mc_mode = "strict";
  auto* mc_cmd = app.add_subcommand("mcnemar", "Paired significance test between two runs");
  mc_cmd->add_option("--gold", mc_gold)->required();
  mc_cmd->add_option("run1", mc_run1)->required();
  mc_cmd->add_option("run2", mc_run2)->required();
  mc_cmd->add_option("--label", mc_label);
  mc_cmd->add_option("--mode", mc_mode, "strict or relaxed");

  // roundtrip-check
  std::string rt_corpus;
  bool rt_per_doc = false;
  auto* rt_cmd = app.add_subcommand("roundtrip-check", "Extended-BIO round-trip fidelity report");
  rt_cmd->add_option("--corpus", rt_corpus)->required();
  rt_cmd->add_flag("--per-doc", rt_per_doc, "Itemize deviations per document");

  // run
  std::string run_config;
  auto* run_cmd = app.add_subcommand("run", "Run a pipeline described by a config file");
  run_cmd->add_option("config", run_config, "Pipeline config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (tokenize_cmd->parsed()) return cmd_tokenize(tok_input, tok_out);
    if (split_cmd->parsed())
      return cmd_split(split_corpus_path, split_fraction, split_seed, split_train,
                       split_test);
    if (dict_cmd->parsed())
      return cmd_dict_match(dict_corpus, dict_vocab, dict_label, dict_out);
    if (train_cmd->parsed()) {
      std::istringstream classes(train_classes);
      std::string piece;
      while (std::getline(classes, piece, ','))
        if (!piece.empty())
          train_config.classes.push_back(parse_label_or_throw(piece));
      return cmd_crf_train(train_corpus, train_out, train_config, train_conll_export);
    }
    if (tag_cmd->parsed()) return cmd_crf_tag(tag_model, tag_corpus_path, tag_out);
    if (norm_cmd->parsed())
      return cmd_normalize(norm_vocab, norm_filter, norm_spans, norm_out);
    if (eval_cmd->parsed())
      return cmd_evaluate(eval_gold, eval_runs, eval_label, eval_relaxed_pool, eval_out);
    if (mc_cmd->parsed())
      return cmd_mcnemar(mc_gold, mc_run1, mc_run2, mc_label, mc_mode);
    if (rt_cmd->parsed()) return cmd_roundtrip(rt_corpus, rt_per_doc);
    if (run_cmd->parsed()) {
      const RunManifest manifest = run_pipeline(run_config);
      std::cout << "run " << manifest.name << " (" << manifest.method
                << ") -> " << manifest.spans_path << '\n';
      return 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const IntegrityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
