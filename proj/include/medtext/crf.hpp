#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "medtext/biocodec.hpp"
#include "medtext/corpus.hpp"
#include "medtext/tokenizer.hpp"

namespace medtext {

struct CrfConfig {
  int window = 2;        // bag-of-words offsets -window..+window
  int ngram_max = 6;     // letter n-gram maximum length
  double l2 = 1.0;       // L2 regularization strength
  int max_iterations = 100;
  double tolerance = 1e-4;  // gradient-norm stopping criterion
  std::vector<EntityLabel> classes;  // restrict training to these; empty = all
};

/// Sparse binary feature vector: sorted unique feature ids.
using FeatureVector = std::vector<int32_t>;

/// Feature strings for one token position: lowercased surrounding words
/// keyed by offset, letter n-grams of the current token with boundary
/// markers, and a collapsed character-shape feature.
std::vector<std::string> extract_feature_strings(const Sentence& sentence,
                                                 std::size_t position,
                                                 const CrfConfig& config);

/// Shape string: X for upper case, x for other letters, d for digits, p
/// otherwise; runs longer than two collapse to two.
std::string word_shape(const std::string& token_text);

struct TaggedSentence {
  std::vector<FeatureVector> features;  // one per token
  std::vector<int> tags;                // tag ids; empty when unlabeled
};

/// Linear-chain CRF: emission weights per (feature, tag) and a tag-pair
/// transition matrix, stored as one flat vector [F*K emissions][K*K
/// transitions].
struct CrfModel {
  CrfConfig config;
  std::vector<TagLabel> tags;  // fixed order; index 0 is O
  std::vector<std::string> feature_names;
  std::unordered_map<std::string, int32_t> feature_ids;
  std::vector<double> weights;

  int tag_count() const { return static_cast<int>(tags.size()); }
  std::size_t weight_count() const {
    return feature_names.size() * tags.size() + tags.size() * tags.size();
  }
  std::size_t transition_offset() const { return feature_names.size() * tags.size(); }
  int tag_index(const TagLabel& tag) const;
  FeatureVector intern_readonly(const std::vector<std::string>& features) const;
};

/// L2-regularized conditional log-likelihood of the data and its exact
/// gradient (empirical minus expected feature counts minus l2 * w), computed
/// with the forward-backward recursion in log space. grad is resized and
/// overwritten. Throws on non-finite intermediates.
double log_likelihood_and_gradient(const std::vector<double>& weights,
                                   std::size_t n_features, int n_tags,
                                   const std::vector<TaggedSentence>& data,
                                   double l2, std::vector<double>& grad);

/// Scoring lattice for one sentence: emission scores per (position, tag) and
/// the shared transition matrix. The decoding and partition routines below
/// operate on this so they can be exercised directly in tests.
struct Lattice {
  int length = 0;
  int n_tags = 0;
  std::vector<double> emission;    // position * n_tags + tag
  std::vector<double> transition;  // from * n_tags + to

  double emission_at(int t, int k) const { return emission[t * n_tags + k]; }
  double transition_at(int i, int j) const { return transition[i * n_tags + j]; }
};

Lattice build_lattice(const CrfModel& model, const std::vector<FeatureVector>& features);

double forward_log_partition(const Lattice& lattice);
double backward_log_partition(const Lattice& lattice);
/// Posterior tag marginals, written as position * n_tags + tag.
std::vector<double> posterior_marginals(const Lattice& lattice);
double path_score(const Lattice& lattice, const std::vector<int>& path);

/// Highest-scoring tag sequence; among ties, the lexicographically smallest
/// sequence of tag indices.
std::vector<int> viterbi_path(const Lattice& lattice);

struct TrainStats {
  int iterations = 0;
  double final_nll = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
};

/// Projects gold spans to extended-BIO tags, extracts features, and runs
/// batch L-BFGS on the regularized likelihood. Deterministic given data
/// order and config. Throws ValidationError on empty training data.
CrfModel train_crf(const Corpus& corpus, const CrfConfig& config,
                   TrainStats* stats = nullptr);

TagSequence viterbi(const CrfModel& model, const Sentence& sentence);

/// Tags every sentence of every document and decodes the tags to spans.
Corpus tag_corpus(const CrfModel& model, const Corpus& corpus,
                  DecodeDiagnostics* diag = nullptr);

/// Versioned text format: header with config and tag list, one line per
/// nonzero feature weight `feature<TAB>tag<TAB>weight`, transitions as
/// `__T__<TAB>tag1|tag2<TAB>weight`.
void save_model(const CrfModel& model, const std::filesystem::path& path);
CrfModel load_model(const std::filesystem::path& path);

}  // namespace medtext
