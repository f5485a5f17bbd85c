#include "medtext/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace medtext {

namespace {

using SpanKey = std::pair<std::vector<Fragment>, EntityLabel>;

SpanKey key_of(const Span& span) { return {span.fragments, span.label}; }

bool spans_overlap_same_class(const Span& a, const Span& b) {
  return a.label == b.label && a.overlaps(b);
}

// Kuhn's augmenting-path maximum bipartite matching. Deterministic: gold
// spans are tried in order and prefer the lowest-index system span.
struct Matcher {
  const std::vector<std::vector<int>>& adj;  // gold -> candidate system spans
  std::vector<int> match_system;             // system -> gold or -1
  std::vector<char> visited;

  explicit Matcher(const std::vector<std::vector<int>>& adjacency, std::size_t n_system)
      : adj(adjacency), match_system(n_system, -1) {}

  bool augment(int g) {
    for (int s : adj[g]) {
      if (visited[s]) continue;
      visited[s] = 1;
      if (match_system[s] < 0 || augment(match_system[s])) {
        match_system[s] = g;
        return true;
      }
    }
    return false;
  }

  void run() {
    for (int g = 0; g < static_cast<int>(adj.size()); ++g) {
      visited.assign(match_system.size(), 0);
      augment(g);
    }
  }
};

std::map<std::string, const AnnotatedDocument*> index_by_id(const Corpus& corpus) {
  std::map<std::string, const AnnotatedDocument*> out;
  for (const AnnotatedDocument& doc : corpus.documents) out[doc.doc_id] = &doc;
  return out;
}

std::vector<Span> spans_of_class(const AnnotatedDocument* doc, EntityLabel label) {
  std::vector<Span> out;
  if (!doc) return out;
  for (const Span& span : doc->spans)
    if (span.label == label) out.push_back(span);
  std::sort(out.begin(), out.end(), span_less);
  return out;
}

}  // namespace

MatchResult match_spans(const std::vector<Span>& gold,
                        const std::vector<Span>& system, MatchMode mode) {
  MatchResult result;
  result.mode = mode;

  std::vector<int> gold_match(gold.size(), -1);
  std::vector<int> system_match(system.size(), -1);

  if (mode == MatchMode::Strict) {
    std::map<SpanKey, std::vector<int>> available;
    for (int s = static_cast<int>(system.size()) - 1; s >= 0; --s)
      available[key_of(system[s])].push_back(s);  // back() = lowest index
    for (int g = 0; g < static_cast<int>(gold.size()); ++g) {
      auto it = available.find(key_of(gold[g]));
      if (it == available.end() || it->second.empty()) continue;
      const int s = it->second.back();
      it->second.pop_back();
      gold_match[g] = s;
      system_match[s] = g;
    }
  } else {
    std::vector<std::vector<int>> adj(gold.size());
    for (std::size_t g = 0; g < gold.size(); ++g)
      for (std::size_t s = 0; s < system.size(); ++s)
        if (spans_overlap_same_class(gold[g], system[s]))
          adj[g].push_back(static_cast<int>(s));
    Matcher matcher(adj, system.size());
    matcher.run();
    for (std::size_t s = 0; s < system.size(); ++s) {
      if (matcher.match_system[s] >= 0) {
        gold_match[matcher.match_system[s]] = static_cast<int>(s);
        system_match[s] = matcher.match_system[s];
      }
    }
  }

  for (int g = 0; g < static_cast<int>(gold.size()); ++g) {
    if (gold_match[g] >= 0) result.pairs.emplace_back(g, gold_match[g]);
    else result.unmatched_gold.push_back(g);
  }
  for (int s = 0; s < static_cast<int>(system.size()); ++s)
    if (system_match[s] < 0) result.unmatched_system.push_back(s);
  return result;
}

Prf prf(const EvalCounts& counts) {
  Prf out;
  const int64_t p_denom = counts.n_tp + counts.n_fp;
  const int64_t r_denom = counts.n_tp + counts.n_fn;
  if (p_denom == 0) out.precision_zero_division = true;
  else out.precision = static_cast<double>(counts.n_tp) / static_cast<double>(p_denom);
  if (r_denom == 0) out.recall_zero_division = true;
  else out.recall = static_cast<double>(counts.n_tp) / static_cast<double>(r_denom);
  if (out.precision + out.recall > 0.0)
    out.f_score = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

Effectiveness effectiveness(const EvalCounts& counts) {
  Effectiveness out;
  if (counts.t_g > 0)
    out.strict = static_cast<double>(counts.n_correct) / static_cast<double>(counts.t_g);
  if (counts.n_tp > 0)
    out.relaxed = static_cast<double>(counts.n_correct) / static_cast<double>(counts.n_tp);
  else
    out.relaxed_undefined = true;
  return out;
}

bool concept_matches(const std::optional<ConceptRef>& gold,
                     const std::optional<ConceptRef>& system) {
  const bool gold_less = !gold || gold->conceptless;
  const bool system_less = !system || system->conceptless;
  if (gold_less || system_less) return gold_less && system_less;
  return gold->code == system->code;
}

EvalCounts count_matches(const Corpus& gold, const Corpus& system,
                         EntityLabel label, MatchMode mode) {
  EvalCounts counts;
  const auto system_docs = index_by_id(system);
  std::set<std::string> seen;
  for (const AnnotatedDocument& gold_doc : gold.documents) {
    seen.insert(gold_doc.doc_id);
    const auto it = system_docs.find(gold_doc.doc_id);
    const std::vector<Span> g = spans_of_class(&gold_doc, label);
    const std::vector<Span> s =
        spans_of_class(it == system_docs.end() ? nullptr : it->second, label);

    const MatchResult matched = match_spans(g, s, mode);
    counts.t_g += static_cast<int64_t>(g.size());
    counts.n_tp += static_cast<int64_t>(matched.pairs.size());
    counts.n_fn += static_cast<int64_t>(matched.unmatched_gold.size());
    counts.n_fp += static_cast<int64_t>(matched.unmatched_system.size());

    // Concept correctness rides on strict span identity regardless of mode.
    const MatchResult strict = mode == MatchMode::Strict
                                   ? matched
                                   : match_spans(g, s, MatchMode::Strict);
    for (const auto& [gi, si] : strict.pairs)
      if (concept_matches(g[gi].concept_ref, s[si].concept_ref)) ++counts.n_correct;
  }
  // System spans in documents absent from gold are false positives.
  for (const auto& [doc_id, doc] : system_docs)
    if (!seen.count(doc_id))
      counts.n_fp += static_cast<int64_t>(spans_of_class(doc, label).size());
  return counts;
}

EvalCounts count_matches_full_task(const Corpus& gold, const Corpus& system,
                                   EntityLabel label) {
  EvalCounts strict = count_matches(gold, system, label, MatchMode::Strict);
  EvalCounts counts;
  counts.t_g = strict.t_g;
  counts.n_correct = strict.n_correct;
  counts.n_tp = strict.n_correct;
  counts.n_fp = (strict.n_tp + strict.n_fp) - strict.n_correct;  // all system spans minus hits
  counts.n_fn = strict.t_g - strict.n_correct;
  return counts;
}

std::vector<double> pooled_accuracy(const Corpus& gold,
                                    const std::vector<const Corpus*>& runs,
                                    EntityLabel label,
                                    std::vector<EvalCounts>& per_run_counts) {
  if (runs.empty()) throw ValidationError("pooled_accuracy: no runs");
  if (per_run_counts.size() != runs.size())
    throw ValidationError("pooled_accuracy: counts/runs size mismatch");

  using PooledKey = std::tuple<std::string, std::vector<Fragment>, EntityLabel>;
  std::set<PooledKey> gold_keys;
  int64_t gold_total = 0;
  for (const AnnotatedDocument& doc : gold.documents) {
    for (const Span& span : doc.spans) {
      if (span.label != label) continue;
      gold_keys.insert({doc.doc_id, span.fragments, span.label});
      ++gold_total;
    }
  }

  std::vector<std::set<PooledKey>> run_keys(runs.size());
  std::set<PooledKey> pool;
  for (std::size_t m = 0; m < runs.size(); ++m) {
    for (const AnnotatedDocument& doc : runs[m]->documents) {
      for (const Span& span : doc.spans) {
        if (span.label != label) continue;
        PooledKey key{doc.doc_id, span.fragments, span.label};
        run_keys[m].insert(key);
        if (!gold_keys.count(key)) pool.insert(key);
      }
    }
  }
  if (pool.empty() && gold_total == 0)
    throw ValidationError("pooled_accuracy: empty negative pool and empty gold standard");

  std::vector<double> accuracies(runs.size(), 0.0);
  for (std::size_t m = 0; m < runs.size(); ++m) {
    int64_t tn = 0;
    for (const PooledKey& key : pool)
      if (!run_keys[m].count(key)) ++tn;
    per_run_counts[m].n_tn = tn;
    const EvalCounts& c = per_run_counts[m];
    const int64_t denom = c.n_tp + c.n_fn + c.n_fp + c.n_tn;
    accuracies[m] = denom == 0 ? 0.0
                               : static_cast<double>(c.n_tp + c.n_tn) /
                                     static_cast<double>(denom);
  }
  return accuracies;
}

McNemarResult mcnemar(int64_t b, int64_t c) {
  if (b + c == 0)
    throw ValidationError("mcnemar: b + c must be positive");
  const double diff = std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
  const double chi2 = diff * diff / static_cast<double>(b + c);
  McNemarResult result;
  result.statistic = chi2;
  // Upper tail of chi-squared with one degree of freedom.
  result.p_value = std::erfc(std::sqrt(chi2 / 2.0));
  result.significant = result.p_value < 0.01;
  return result;
}

Contingency mcnemar_table(const Corpus& gold, const Corpus& run1,
                          const Corpus& run2, EntityLabel label, MatchMode mode) {
  Contingency table;
  const auto docs1 = index_by_id(run1);
  const auto docs2 = index_by_id(run2);
  for (const AnnotatedDocument& gold_doc : gold.documents) {
    const std::vector<Span> g = spans_of_class(&gold_doc, label);
    if (g.empty()) continue;
    const auto it1 = docs1.find(gold_doc.doc_id);
    const auto it2 = docs2.find(gold_doc.doc_id);
    const std::vector<Span> s1 =
        spans_of_class(it1 == docs1.end() ? nullptr : it1->second, label);
    const std::vector<Span> s2 =
        spans_of_class(it2 == docs2.end() ? nullptr : it2->second, label);

    std::vector<char> hit1(g.size(), 0), hit2(g.size(), 0);
    for (const auto& [gi, si] : match_spans(g, s1, mode).pairs) hit1[gi] = 1;
    for (const auto& [gi, si] : match_spans(g, s2, mode).pairs) hit2[gi] = 1;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (hit1[i] && hit2[i]) ++table.a;
      else if (hit1[i]) ++table.b;
      else if (hit2[i]) ++table.c;
      else ++table.d;
    }
  }
  return table;
}

}  // namespace medtext
