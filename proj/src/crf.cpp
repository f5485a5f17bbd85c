#include "medtext/crf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "medtext/lbfgs.hpp"

namespace medtext {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logsumexp(const double* values, int n) {
  double max = kNegInf;
  for (int i = 0; i < n; ++i) max = std::max(max, values[i]);
  if (max == kNegInf) return kNegInf;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += std::exp(values[i] - max);
  return max + std::log(sum);
}

std::string format_weight(double w) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", w);
  return buf;
}

}  // namespace

int CrfModel::tag_index(const TagLabel& tag) const {
  for (std::size_t i = 0; i < tags.size(); ++i)
    if (tags[i] == tag) return static_cast<int>(i);
  return -1;
}

FeatureVector CrfModel::intern_readonly(const std::vector<std::string>& features) const {
  FeatureVector out;
  out.reserve(features.size());
  for (const std::string& f : features) {
    const auto it = feature_ids.find(f);
    if (it != feature_ids.end()) out.push_back(it->second);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double log_likelihood_and_gradient(const std::vector<double>& weights,
                                   std::size_t n_features, int n_tags,
                                   const std::vector<TaggedSentence>& data,
                                   double l2, std::vector<double>& grad) {
  const int k = n_tags;
  const std::size_t trans_off = n_features * static_cast<std::size_t>(k);
  if (weights.size() != trans_off + static_cast<std::size_t>(k) * k)
    throw ValidationError("weight vector size does not match feature/tag counts");

  grad.assign(weights.size(), 0.0);
  double ll = 0.0;

  std::vector<double> emission, alpha, beta, scratch(k);

  for (const TaggedSentence& sentence : data) {
    const int len = static_cast<int>(sentence.features.size());
    if (len == 0) continue;
    if (static_cast<int>(sentence.tags.size()) != len)
      throw ValidationError("tag sequence length does not match feature rows");

    emission.assign(static_cast<std::size_t>(len) * k, 0.0);
    for (int t = 0; t < len; ++t)
      for (int32_t f : sentence.features[t]) {
        const double* wf = &weights[static_cast<std::size_t>(f) * k];
        double* e = &emission[static_cast<std::size_t>(t) * k];
        for (int j = 0; j < k; ++j) e[j] += wf[j];
      }

    auto trans = [&](int i, int j) { return weights[trans_off + static_cast<std::size_t>(i) * k + j]; };

    // Forward pass.
    alpha.assign(static_cast<std::size_t>(len) * k, 0.0);
    for (int j = 0; j < k; ++j) alpha[j] = emission[j];
    for (int t = 1; t < len; ++t) {
      for (int j = 0; j < k; ++j) {
        for (int i = 0; i < k; ++i)
          scratch[i] = alpha[static_cast<std::size_t>(t - 1) * k + i] + trans(i, j);
        alpha[static_cast<std::size_t>(t) * k + j] =
            emission[static_cast<std::size_t>(t) * k + j] + logsumexp(scratch.data(), k);
      }
    }
    const double log_z = logsumexp(&alpha[static_cast<std::size_t>(len - 1) * k], k);
    if (!std::isfinite(log_z))
      throw Error("crf: non-finite log partition (scaling bug)");

    // Backward pass.
    beta.assign(static_cast<std::size_t>(len) * k, 0.0);
    for (int t = len - 2; t >= 0; --t) {
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j)
          scratch[j] = trans(i, j) + emission[static_cast<std::size_t>(t + 1) * k + j] +
                       beta[static_cast<std::size_t>(t + 1) * k + j];
        beta[static_cast<std::size_t>(t) * k + i] = logsumexp(scratch.data(), k);
      }
    }

    // Gold path score and empirical counts.
    double path = 0.0;
    for (int t = 0; t < len; ++t) {
      const int y = sentence.tags[t];
      if (y < 0 || y >= k) throw ValidationError("tag id out of range");
      path += emission[static_cast<std::size_t>(t) * k + y];
      for (int32_t f : sentence.features[t]) grad[static_cast<std::size_t>(f) * k + y] += 1.0;
      if (t > 0) {
        path += trans(sentence.tags[t - 1], y);
        grad[trans_off + static_cast<std::size_t>(sentence.tags[t - 1]) * k + y] += 1.0;
      }
    }
    ll += path - log_z;

    // Expected emission counts from unary marginals.
    for (int t = 0; t < len; ++t) {
      for (int j = 0; j < k; ++j) {
        const double gamma = std::exp(alpha[static_cast<std::size_t>(t) * k + j] +
                                      beta[static_cast<std::size_t>(t) * k + j] - log_z);
        if (gamma == 0.0) {
          scratch[j] = 0.0;
          continue;
        }
        scratch[j] = gamma;
      }
      for (int32_t f : sentence.features[t]) {
        double* gf = &grad[static_cast<std::size_t>(f) * k];
        for (int j = 0; j < k; ++j) gf[j] -= scratch[j];
      }
    }

    // Expected transition counts from pairwise marginals.
    for (int t = 1; t < len; ++t) {
      for (int i = 0; i < k; ++i) {
        const double a = alpha[static_cast<std::size_t>(t - 1) * k + i];
        if (a == kNegInf) continue;
        for (int j = 0; j < k; ++j) {
          const double xi = std::exp(a + trans(i, j) +
                                     emission[static_cast<std::size_t>(t) * k + j] +
                                     beta[static_cast<std::size_t>(t) * k + j] - log_z);
          grad[trans_off + static_cast<std::size_t>(i) * k + j] -= xi;
        }
      }
    }
  }

  // L2 penalty.
  for (std::size_t i = 0; i < weights.size(); ++i) {
    ll -= 0.5 * l2 * weights[i] * weights[i];
    grad[i] -= l2 * weights[i];
  }
  if (!std::isfinite(ll)) throw Error("crf: non-finite log-likelihood");
  return ll;
}

Lattice build_lattice(const CrfModel& model, const std::vector<FeatureVector>& features) {
  Lattice lattice;
  lattice.length = static_cast<int>(features.size());
  lattice.n_tags = model.tag_count();
  const int k = lattice.n_tags;
  lattice.emission.assign(static_cast<std::size_t>(lattice.length) * k, 0.0);
  for (int t = 0; t < lattice.length; ++t)
    for (int32_t f : features[t]) {
      const double* wf = &model.weights[static_cast<std::size_t>(f) * k];
      double* e = &lattice.emission[static_cast<std::size_t>(t) * k];
      for (int j = 0; j < k; ++j) e[j] += wf[j];
    }
  lattice.transition.assign(model.weights.begin() + model.transition_offset(),
                            model.weights.end());
  return lattice;
}

double forward_log_partition(const Lattice& lattice) {
  const int k = lattice.n_tags;
  std::vector<double> alpha(k), next(k), scratch(k);
  for (int j = 0; j < k; ++j) alpha[j] = lattice.emission_at(0, j);
  for (int t = 1; t < lattice.length; ++t) {
    for (int j = 0; j < k; ++j) {
      for (int i = 0; i < k; ++i) scratch[i] = alpha[i] + lattice.transition_at(i, j);
      next[j] = lattice.emission_at(t, j) + logsumexp(scratch.data(), k);
    }
    alpha.swap(next);
  }
  return logsumexp(alpha.data(), k);
}

double backward_log_partition(const Lattice& lattice) {
  const int k = lattice.n_tags;
  std::vector<double> beta(k, 0.0), prev(k), scratch(k);
  for (int t = lattice.length - 2; t >= 0; --t) {
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j)
        scratch[j] = lattice.transition_at(i, j) + lattice.emission_at(t + 1, j) + beta[j];
      prev[i] = logsumexp(scratch.data(), k);
    }
    beta.swap(prev);
  }
  std::vector<double> first(k);
  for (int j = 0; j < k; ++j) first[j] = lattice.emission_at(0, j) + beta[j];
  return logsumexp(first.data(), k);
}

std::vector<double> posterior_marginals(const Lattice& lattice) {
  const int k = lattice.n_tags;
  const int len = lattice.length;
  std::vector<double> alpha(static_cast<std::size_t>(len) * k);
  std::vector<double> beta(static_cast<std::size_t>(len) * k, 0.0);
  std::vector<double> scratch(k);

  for (int j = 0; j < k; ++j) alpha[j] = lattice.emission_at(0, j);
  for (int t = 1; t < len; ++t)
    for (int j = 0; j < k; ++j) {
      for (int i = 0; i < k; ++i)
        scratch[i] = alpha[static_cast<std::size_t>(t - 1) * k + i] + lattice.transition_at(i, j);
      alpha[static_cast<std::size_t>(t) * k + j] =
          lattice.emission_at(t, j) + logsumexp(scratch.data(), k);
    }
  for (int t = len - 2; t >= 0; --t)
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j)
        scratch[j] = lattice.transition_at(i, j) + lattice.emission_at(t + 1, j) +
                     beta[static_cast<std::size_t>(t + 1) * k + j];
      beta[static_cast<std::size_t>(t) * k + i] = logsumexp(scratch.data(), k);
    }

  const double log_z = logsumexp(&alpha[static_cast<std::size_t>(len - 1) * k], k);
  std::vector<double> marginals(static_cast<std::size_t>(len) * k);
  for (std::size_t i = 0; i < marginals.size(); ++i)
    marginals[i] = std::exp(alpha[i] + beta[i] - log_z);
  return marginals;
}

double path_score(const Lattice& lattice, const std::vector<int>& path) {
  double score = 0.0;
  for (int t = 0; t < lattice.length; ++t) {
    score += lattice.emission_at(t, path[t]);
    if (t > 0) score += lattice.transition_at(path[t - 1], path[t]);
  }
  return score;
}

std::vector<int> viterbi_path(const Lattice& lattice) {
  const int k = lattice.n_tags;
  const int len = lattice.length;
  if (len == 0) return {};

  // Suffix maxima: best[t][j] = best score of a path over positions t..end
  // starting with tag j. Selecting forward with a strict comparison yields
  // the lexicographically smallest argmax sequence.
  std::vector<double> best(static_cast<std::size_t>(len) * k);
  for (int j = 0; j < k; ++j)
    best[static_cast<std::size_t>(len - 1) * k + j] = lattice.emission_at(len - 1, j);
  for (int t = len - 2; t >= 0; --t) {
    for (int j = 0; j < k; ++j) {
      double m = kNegInf;
      for (int i = 0; i < k; ++i)
        m = std::max(m, lattice.transition_at(j, i) +
                            best[static_cast<std::size_t>(t + 1) * k + i]);
      best[static_cast<std::size_t>(t) * k + j] = lattice.emission_at(t, j) + m;
    }
  }

  std::vector<int> path(len);
  int prev = -1;
  for (int t = 0; t < len; ++t) {
    int arg = 0;
    double m = kNegInf;
    for (int j = 0; j < k; ++j) {
      const double score = (t == 0 ? 0.0 : lattice.transition_at(prev, j)) +
                           best[static_cast<std::size_t>(t) * k + j];
      if (score > m) {
        m = score;
        arg = j;
      }
    }
    path[t] = arg;
    prev = arg;
  }
  return path;
}

namespace {

std::vector<TagLabel> build_tag_list(const std::set<EntityLabel>& classes) {
  std::vector<TagLabel> tags;
  tags.push_back(TagLabel{});  // O first
  for (EntityLabel cls : all_labels()) {
    if (!classes.count(cls)) continue;
    for (TagPrefix p : {TagPrefix::B, TagPrefix::I, TagPrefix::DB, TagPrefix::DI,
                        TagPrefix::HB, TagPrefix::HI})
      tags.push_back(TagLabel{p, cls});
  }
  return tags;
}

}  // namespace

CrfModel train_crf(const Corpus& corpus, const CrfConfig& config, TrainStats* stats) {
  CrfModel model;
  model.config = config;

  // Project gold spans onto extended-BIO tags.
  std::vector<std::pair<Sentence, TagSequence>> tagged;
  for (const AnnotatedDocument& doc : corpus.documents)
    for (auto& pair : encode_document(doc)) tagged.push_back(std::move(pair));

  const std::set<EntityLabel> wanted(config.classes.begin(), config.classes.end());
  std::set<EntityLabel> present;
  for (auto& [sentence, tags] : tagged)
    for (TagLabel& tag : tags) {
      if (tag.is_outside()) continue;
      if (!wanted.empty() && !wanted.count(*tag.cls)) {
        tag = TagLabel{};  // outside the requested classes
        continue;
      }
      present.insert(*tag.cls);
    }
  if (tagged.empty()) throw ValidationError("train_crf: no training sentences");
  if (present.empty())
    throw ValidationError("train_crf: no labeled spans in the training data");

  model.tags = build_tag_list(present);
  const int k = model.tag_count();

  // Feature vocabulary and dataset, in deterministic corpus order.
  std::vector<TaggedSentence> data;
  data.reserve(tagged.size());
  for (const auto& [sentence, tags] : tagged) {
    TaggedSentence ts;
    ts.features.reserve(sentence.tokens.size());
    ts.tags.reserve(sentence.tokens.size());
    for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
      FeatureVector fv;
      for (const std::string& f : extract_feature_strings(sentence, t, config)) {
        auto [it, inserted] = model.feature_ids.try_emplace(
            f, static_cast<int32_t>(model.feature_names.size()));
        if (inserted) model.feature_names.push_back(f);
        fv.push_back(it->second);
      }
      std::sort(fv.begin(), fv.end());
      ts.features.push_back(std::move(fv));
      const int tag_id = model.tag_index(tags[t]);
      ts.tags.push_back(tag_id < 0 ? 0 : tag_id);
    }
    if (!ts.features.empty()) data.push_back(std::move(ts));
  }
  if (data.empty()) throw ValidationError("train_crf: no tokens in the training data");

  model.weights.assign(model.weight_count(), 0.0);

  const std::size_t n_features = model.feature_names.size();
  const Objective objective = [&](const std::vector<double>& w,
                                  std::vector<double>& grad) {
    const double ll = log_likelihood_and_gradient(w, n_features, k, data,
                                                  config.l2, grad);
    for (double& g : grad) g = -g;
    return -ll;
  };

  LbfgsOptions options;
  options.max_iterations = config.max_iterations;
  options.tolerance = config.tolerance;
  const LbfgsResult result = lbfgs_minimize(objective, model.weights, options);
  if (stats) {
    stats->iterations = result.iterations;
    stats->final_nll = result.value;
    stats->gradient_norm = result.gradient_norm;
    stats->converged = result.converged;
  }
  return model;
}

TagSequence viterbi(const CrfModel& model, const Sentence& sentence) {
  std::vector<FeatureVector> features;
  features.reserve(sentence.tokens.size());
  for (std::size_t t = 0; t < sentence.tokens.size(); ++t)
    features.push_back(
        model.intern_readonly(extract_feature_strings(sentence, t, model.config)));
  const std::vector<int> path = viterbi_path(build_lattice(model, features));
  TagSequence tags(path.size());
  for (std::size_t t = 0; t < path.size(); ++t) tags[t] = model.tags[path[t]];
  return tags;
}

Corpus tag_corpus(const CrfModel& model, const Corpus& corpus, DecodeDiagnostics* diag) {
  Corpus out{corpus.name, {}};
  out.documents.reserve(corpus.documents.size());
  for (const AnnotatedDocument& doc : corpus.documents) {
    AnnotatedDocument tagged{doc.doc_id, doc.text, {}};
    for (const Sentence& sentence : split_sentences(doc.text)) {
      const TagSequence tags = viterbi(model, sentence);
      for (Span& span : decode(sentence, tags, diag))
        tagged.spans.push_back(std::move(span));
    }
    std::sort(tagged.spans.begin(), tagged.spans.end(), span_less);
    out.documents.push_back(std::move(tagged));
  }
  return out;
}

void save_model(const CrfModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open " + path.string() + " for writing");

  out << "medtext-crf 1\n";
  out << "window " << model.config.window << '\n';
  out << "ngram_max " << model.config.ngram_max << '\n';
  out << "l2 " << format_weight(model.config.l2) << '\n';
  out << "max_iterations " << model.config.max_iterations << '\n';
  out << "tolerance " << format_weight(model.config.tolerance) << '\n';
  out << "tags";
  for (const TagLabel& tag : model.tags) out << ' ' << tag.str();
  out << '\n';

  const int k = model.tag_count();
  for (std::size_t f = 0; f < model.feature_names.size(); ++f)
    for (int j = 0; j < k; ++j) {
      const double w = model.weights[f * k + j];
      if (w == 0.0) continue;
      out << model.feature_names[f] << '\t' << model.tags[j].str() << '\t'
          << format_weight(w) << '\n';
    }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double w = model.weights[model.transition_offset() + static_cast<std::size_t>(i) * k + j];
      if (w == 0.0) continue;
      out << "__T__\t" << model.tags[i].str() << '|' << model.tags[j].str() << '\t'
          << format_weight(w) << '\n';
    }
}

CrfModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model " + path.string());

  CrfModel model;
  std::string line;
  int line_no = 0;

  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError(path.string() + " line " + std::to_string(line_no) + ": " + why);
  };

  if (!std::getline(in, line)) throw ParseError("empty model file " + path.string());
  ++line_no;
  if (line != "medtext-crf 1") throw fail("unsupported model format/version");

  // Header lines until the tag list.
  bool have_tags = false;
  while (!have_tags && std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "window") fields >> model.config.window;
    else if (key == "ngram_max") fields >> model.config.ngram_max;
    else if (key == "l2") fields >> model.config.l2;
    else if (key == "max_iterations") fields >> model.config.max_iterations;
    else if (key == "tolerance") fields >> model.config.tolerance;
    else if (key == "tags") {
      std::string tag_text;
      while (fields >> tag_text) {
        const auto tag = TagLabel::parse(tag_text);
        if (!tag) throw fail("unknown tag " + tag_text);
        model.tags.push_back(*tag);
      }
      have_tags = true;
    } else {
      throw fail("unknown header key '" + key + "'");
    }
    if (fields.fail() && key != "tags") throw fail("malformed header value");
  }
  if (!have_tags || model.tags.empty()) throw fail("missing tag list");
  if (!(model.tags[0] == TagLabel{})) throw fail("first tag must be O");

  const int k = model.tag_count();
  struct Entry {
    std::string feature;
    int tag_from, tag_to;  // tag_from < 0 for emissions
    double weight;
  };
  std::vector<Entry> entries;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? std::string::npos
                                                   : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw fail("expected 3 tab-separated columns");
    const std::string col0 = line.substr(0, t1);
    const std::string col1 = line.substr(t1 + 1, t2 - t1 - 1);
    double weight = 0.0;
    try {
      weight = std::stod(line.substr(t2 + 1));
    } catch (const std::exception&) {
      throw fail("bad weight");
    }
    if (!std::isfinite(weight)) throw fail("non-finite weight");

    Entry entry;
    entry.weight = weight;
    if (col0 == "__T__") {
      const std::size_t bar = col1.find('|');
      if (bar == std::string::npos) throw fail("transition needs tag1|tag2");
      const auto t_from = TagLabel::parse(col1.substr(0, bar));
      const auto t_to = TagLabel::parse(col1.substr(bar + 1));
      if (!t_from || !t_to) throw fail("unknown transition tag");
      entry.tag_from = model.tag_index(*t_from);
      entry.tag_to = model.tag_index(*t_to);
      if (entry.tag_from < 0 || entry.tag_to < 0) throw fail("transition tag not in tag list");
    } else {
      const auto tag = TagLabel::parse(col1);
      if (!tag) throw fail("unknown tag " + col1);
      entry.tag_from = -1;
      entry.tag_to = model.tag_index(*tag);
      if (entry.tag_to < 0) throw fail("tag not in tag list");
      entry.feature = col0;
      auto [it, inserted] = model.feature_ids.try_emplace(
          entry.feature, static_cast<int32_t>(model.feature_names.size()));
      if (inserted) model.feature_names.push_back(entry.feature);
    }
    entries.push_back(std::move(entry));
  }

  model.weights.assign(model.weight_count(), 0.0);
  for (const Entry& entry : entries) {
    if (entry.tag_from >= 0) {
      model.weights[model.transition_offset() +
                    static_cast<std::size_t>(entry.tag_from) * k + entry.tag_to] = entry.weight;
    } else {
      const int32_t f = model.feature_ids.at(entry.feature);
      model.weights[static_cast<std::size_t>(f) * k + entry.tag_to] = entry.weight;
    }
  }
  return model;
}

}  // namespace medtext
