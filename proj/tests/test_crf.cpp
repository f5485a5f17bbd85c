#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include "medtext/crf.hpp"
#include "medtext/eval.hpp"
#include "testutil.hpp"

using namespace medtext;

namespace {

Sentence sentence_of(const std::string& text) {
  Sentence s;
  s.tokens = tokenize(text);
  s.start = 0;
  s.end = static_cast<int64_t>(utf8::length(text));
  return s;
}

}  // namespace

TEST_CASE("word shape collapses runs at two") {
  CHECK(word_shape("Lipitor") == "Xxx");
  CHECK(word_shape("LIPITOR") == "XX");
  CHECK(word_shape("abc") == "xx");
  CHECK(word_shape("Ab3") == "Xxd");
  CHECK(word_shape("40mg") == "ddxx");
  CHECK(word_shape("A-1") == "Xpd");
  CHECK(word_shape("aBcDeF") == "xXxXxX");
}

TEST_CASE("feature extraction: window, n-grams, shape") {
  const Sentence s = sentence_of("I take Lipitor daily");
  CrfConfig config;
  const auto features = extract_feature_strings(s, 2, config);
  const std::set<std::string> set(features.begin(), features.end());

  // Window features keyed by offset, omitted past the boundary.
  CHECK(set.count("w[-2]=i"));
  CHECK(set.count("w[-1]=take"));
  CHECK(set.count("w[0]=lipitor"));
  CHECK(set.count("w[1]=daily"));
  CHECK(!set.count("w[2]="));

  CHECK(set.count("shape=Xxx"));
  CHECK(set.count("ng=lip"));
  CHECK(set.count("ng=^lipito"));
  CHECK(set.count("ng=ipitor$"));

  const auto first = extract_feature_strings(s, 0, config);
  for (const std::string& f : first) CHECK(f.find("w[-") == std::string::npos);
}

TEST_CASE("feature extraction: the ache substring enumeration") {
  const Sentence s = sentence_of("ache");
  CrfConfig config;
  const auto features = extract_feature_strings(s, 0, config);
  std::set<std::string> ngrams;
  for (const std::string& f : features)
    if (f.rfind("ng=", 0) == 0) ngrams.insert(f.substr(3));
  const std::set<std::string> expected = {
      "a",  "c",  "h",   "e",   "ac",   "ch",   "he",   "ach",  "che",
      "ache", "^a", "^ac", "^ach", "^ache", "e$", "he$", "che$", "ache$"};
  CHECK(ngrams == expected);
}

TEST_CASE("log-likelihood of a single token under zero weights is -log k") {
  for (int k = 2; k <= 6; ++k) {
    std::vector<TaggedSentence> data(1);
    data[0].features = {FeatureVector{0}};
    data[0].tags = {0};
    std::vector<double> weights(static_cast<std::size_t>(2) * k + k * k, 0.0);
    std::vector<double> grad;
    const double ll = log_likelihood_and_gradient(weights, 2, k, data, 0.0, grad);
    CHECK(ll == doctest::Approx(-std::log(static_cast<double>(k))).epsilon(1e-12));
  }
}

TEST_CASE("regularizer strictly decreases the likelihood") {
  tests::Rng rng(5);
  const tests::RandomCrfInstance inst = tests::random_crf_instance(rng, 4, 5, 20, true);
  std::vector<double> grad;
  const double plain = log_likelihood_and_gradient(inst.weights, inst.n_features,
                                                   inst.n_tags, inst.data, 0.0, grad);
  const double penalized = log_likelihood_and_gradient(
      inst.weights, inst.n_features, inst.n_tags, inst.data, 2.0, grad);
  CHECK(penalized < plain);
}

TEST_CASE("analytic gradient matches central finite differences") {
  tests::Rng rng(17);
  int checked = 0;
  for (int trial = 0; trial < 25; ++trial) {
    tests::RandomCrfInstance inst = tests::random_crf_instance(rng, 5, 6, 30, true);
    std::vector<double> grad;
    log_likelihood_and_gradient(inst.weights, inst.n_features, inst.n_tags,
                                inst.data, 0.5, grad);
    const double step = 1e-5;
    for (std::size_t i = 0; i < inst.weights.size(); ++i) {
      std::vector<double> scratch;
      inst.weights[i] += step;
      const double up = log_likelihood_and_gradient(
          inst.weights, inst.n_features, inst.n_tags, inst.data, 0.5, scratch);
      inst.weights[i] -= 2 * step;
      const double down = log_likelihood_and_gradient(
          inst.weights, inst.n_features, inst.n_tags, inst.data, 0.5, scratch);
      inst.weights[i] += step;
      const double numeric = (up - down) / (2 * step);
      const double rel = std::abs(grad[i] - numeric) / (std::abs(numeric) + 1e-8);
      CHECK(rel < 1e-4);
      ++checked;
    }
  }
  CHECK(checked > 500);
}

TEST_CASE("forward and backward partition functions agree") {
  tests::Rng rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    const tests::RandomCrfInstance inst = tests::random_crf_instance(rng, 5, 6, 20, true);
    for (const TaggedSentence& ts : inst.data) {
      const Lattice lattice = tests::lattice_of(inst, ts);
      const double fwd = forward_log_partition(lattice);
      const double bwd = backward_log_partition(lattice);
      CHECK(fwd == doctest::Approx(bwd).epsilon(1e-10));
      CHECK(fwd == doctest::Approx(tests::brute_force_log_partition(lattice)).epsilon(1e-9));
    }
  }
}

TEST_CASE("posterior marginals sum to one at every position") {
  tests::Rng rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    const tests::RandomCrfInstance inst = tests::random_crf_instance(rng, 5, 6, 20, true);
    for (const TaggedSentence& ts : inst.data) {
      const Lattice lattice = tests::lattice_of(inst, ts);
      const std::vector<double> marginals = posterior_marginals(lattice);
      for (int t = 0; t < lattice.length; ++t) {
        double sum = 0.0;
        for (int j = 0; j < lattice.n_tags; ++j)
          sum += marginals[static_cast<std::size_t>(t) * lattice.n_tags + j];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("viterbi equals brute-force argmax") {
  tests::Rng rng(41);
  for (int trial = 0; trial < 60; ++trial) {
    const tests::RandomCrfInstance inst = tests::random_crf_instance(rng, 5, 6, 20, true);
    for (const TaggedSentence& ts : inst.data) {
      const Lattice lattice = tests::lattice_of(inst, ts);
      CHECK(viterbi_path(lattice) == tests::brute_force_viterbi(lattice));
    }
  }
}

TEST_CASE("viterbi under zero weights picks the first tag everywhere") {
  Lattice lattice;
  lattice.length = 5;
  lattice.n_tags = 4;
  lattice.emission.assign(20, 0.0);
  lattice.transition.assign(16, 0.0);
  CHECK(viterbi_path(lattice) == std::vector<int>{0, 0, 0, 0, 0});
}

TEST_CASE("objective is concave: midpoint likelihood at least the average") {
  tests::Rng rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    const tests::RandomCrfInstance inst = tests::random_crf_instance(rng, 4, 5, 16, true);
    std::vector<double> other(inst.weights.size());
    for (double& w : other) w = tests::rand_real(rng, -1.5, 1.5);
    std::vector<double> mid(inst.weights.size());
    for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (inst.weights[i] + other[i]);

    std::vector<double> grad;
    const double ll_a = log_likelihood_and_gradient(inst.weights, inst.n_features,
                                                    inst.n_tags, inst.data, 0.0, grad);
    const double ll_b = log_likelihood_and_gradient(other, inst.n_features,
                                                    inst.n_tags, inst.data, 0.0, grad);
    const double ll_mid = log_likelihood_and_gradient(mid, inst.n_features,
                                                      inst.n_tags, inst.data, 0.0, grad);
    CHECK(ll_mid >= 0.5 * (ll_a + ll_b) - 1e-9);
  }
}

namespace {

// Synthetic corpus where spans are exactly the occurrences of a small
// lexicon embedded in random filler text.
Corpus synthetic_lexicon_corpus(tests::Rng& rng, int n_docs,
                                const std::vector<std::string>& lexicon) {
  Corpus corpus{"synthetic", {}};
  for (int d = 0; d < n_docs; ++d) {
    std::string text;
    std::vector<Span> spans;
    const int n_tokens = tests::rand_int(rng, 6, 14);
    int64_t offset = 0;
    for (int t = 0; t < n_tokens; ++t) {
      std::string word;
      bool is_term = tests::rand_int(rng, 0, 4) == 0;
      if (is_term)
        word = lexicon[static_cast<std::size_t>(
            tests::rand_int(rng, 0, static_cast<int>(lexicon.size()) - 1))];
      else
        word = tests::rand_word(rng, 3, 7) + "f";  // filler never collides
      if (t > 0) {
        text += ' ';
        ++offset;
      }
      const int64_t start = offset;
      text += word;
      offset += static_cast<int64_t>(word.size());
      if (is_term)
        spans.push_back(Span{{{start, offset}}, EntityLabel::ADR, std::nullopt});
    }
    corpus.documents.push_back({"doc" + std::to_string(10000 + d), text, spans});
  }
  return corpus;
}

std::vector<std::string> make_lexicon(tests::Rng& rng, int n_terms) {
  // Terms end in "q", filler ends in "f": occurrences are unambiguous.
  std::set<std::string> terms;
  while (static_cast<int>(terms.size()) < n_terms)
    terms.insert(tests::rand_word(rng, 4, 7) + "q");
  return {terms.begin(), terms.end()};
}

}  // namespace

TEST_CASE("training learns a lexicon-membership tagging rule") {
  tests::Rng rng(61);
  const std::vector<std::string> lexicon = make_lexicon(rng, 20);
  const Corpus corpus = synthetic_lexicon_corpus(rng, 220, lexicon);
  const auto [train, test] = split_corpus(corpus, 0.7, 11);

  CrfConfig config;
  config.max_iterations = 60;
  TrainStats stats;
  const CrfModel model = train_crf(train, config, &stats);
  CHECK(stats.iterations > 0);

  const Corpus tagged = tag_corpus(model, test);
  const EvalCounts counts =
      count_matches(test, tagged, EntityLabel::ADR, MatchMode::Strict);
  const Prf result = prf(counts);
  CHECK(result.f_score >= 0.95);

  SUBCASE("a sentence containing a lexicon term gets B tags on it") {
    const std::string text = "zzzf qqqf " + lexicon[0] + " wwwf";
    const Sentence s = sentence_of(text);
    const TagSequence tags = viterbi(model, s);
    REQUIRE(tags.size() == 4);
    CHECK(tags[2] == TagLabel{TagPrefix::B, EntityLabel::ADR});
  }
}

TEST_CASE("training is deterministic") {
  tests::Rng rng(67);
  const std::vector<std::string> lexicon = make_lexicon(rng, 8);
  const Corpus corpus = synthetic_lexicon_corpus(rng, 40, lexicon);

  CrfConfig config;
  config.max_iterations = 25;
  const CrfModel m1 = train_crf(corpus, config);
  const CrfModel m2 = train_crf(corpus, config);
  REQUIRE(m1.weights.size() == m2.weights.size());
  for (std::size_t i = 0; i < m1.weights.size(); ++i)
    CHECK(m1.weights[i] == m2.weights[i]);

  const Corpus t1 = tag_corpus(m1, corpus);
  const Corpus t2 = tag_corpus(m2, corpus);
  for (std::size_t d = 0; d < t1.documents.size(); ++d)
    CHECK(t1.documents[d].spans == t2.documents[d].spans);
}

TEST_CASE("zero training iterations leave all weights zero") {
  tests::Rng rng(71);
  const Corpus corpus = synthetic_lexicon_corpus(rng, 10, make_lexicon(rng, 4));
  CrfConfig config;
  config.max_iterations = 0;
  const CrfModel model = train_crf(corpus, config);
  for (double w : model.weights) CHECK(w == 0.0);
}

TEST_CASE("training on an empty corpus is an error") {
  CHECK_THROWS_AS(train_crf(Corpus{}, CrfConfig{}), ValidationError);
  Corpus no_spans{"c", {{"d", "just text here", {}}}};
  CHECK_THROWS_AS(train_crf(no_spans, CrfConfig{}), ValidationError);
}

TEST_CASE("model save/load round-trip reproduces predictions") {
  tests::Rng rng(73);
  const std::vector<std::string> lexicon = make_lexicon(rng, 6);
  const Corpus corpus = synthetic_lexicon_corpus(rng, 30, lexicon);
  CrfConfig config;
  config.max_iterations = 15;
  const CrfModel model = train_crf(corpus, config);

  const auto path = std::filesystem::temp_directory_path() / "medtext_model_test.crf";
  save_model(model, path);
  const CrfModel loaded = load_model(path);

  CHECK(loaded.tags.size() == model.tags.size());
  CHECK(loaded.config.window == model.config.window);
  const Corpus a = tag_corpus(model, corpus);
  const Corpus b = tag_corpus(loaded, corpus);
  for (std::size_t d = 0; d < a.documents.size(); ++d)
    CHECK(a.documents[d].spans == b.documents[d].spans);
  std::filesystem::remove(path);
}

TEST_CASE("per-class training restricts the tag set") {
  tests::Rng rng(79);
  Corpus corpus = synthetic_lexicon_corpus(rng, 20, make_lexicon(rng, 4));
  // Relabel half the spans as Drug.
  int flip = 0;
  for (auto& doc : corpus.documents)
    for (auto& span : doc.spans)
      if (++flip % 2 == 0) span.label = EntityLabel::Drug;

  CrfConfig config;
  config.max_iterations = 5;
  config.classes = {EntityLabel::Drug};
  const CrfModel model = train_crf(corpus, config);
  for (const TagLabel& tag : model.tags)
    if (!tag.is_outside()) CHECK(*tag.cls == EntityLabel::Drug);
}
