#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medtext/corpus.hpp"

namespace medtext {

enum class MatchMode { Strict, Relaxed };

/// One-to-one alignment between gold and system spans of one document.
/// Strict pairs have identical fragment sets and class; relaxed pairs share
/// at least one character and the class, maximizing the number of pairs.
struct MatchResult {
  std::vector<std::pair<int, int>> pairs;  // (gold index, system index)
  std::vector<int> unmatched_gold;
  std::vector<int> unmatched_system;
  MatchMode mode = MatchMode::Strict;
};

MatchResult match_spans(const std::vector<Span>& gold,
                        const std::vector<Span>& system, MatchMode mode);

struct EvalCounts {
  int64_t n_tp = 0;
  int64_t n_fp = 0;
  int64_t n_fn = 0;
  int64_t n_tn = 0;
  int64_t n_correct = 0;  // strict matches carrying the gold concept
  int64_t t_g = 0;        // total gold spans
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  bool precision_zero_division = false;
  bool recall_zero_division = false;
};

/// P = tp/(tp+fp), R = tp/(tp+fn), F = 2PR/(P+R). Zero denominators yield 0
/// with the corresponding flag set.
Prf prf(const EvalCounts& counts);

struct Effectiveness {
  double strict = 0.0;   // n_correct / t_g
  double relaxed = 0.0;  // n_correct / n_tp
  bool relaxed_undefined = false;  // n_tp == 0
};

Effectiveness effectiveness(const EvalCounts& counts);

/// True when the system concept counts as the gold concept: both conceptless
/// (an absent gold concept counts as conceptless) or equal codes.
bool concept_matches(const std::optional<ConceptRef>& gold,
                     const std::optional<ConceptRef>& system);

/// Corpus-level identification counts for one entity class. counts.n_tn is
/// left zero; pooled accuracy fills it.
EvalCounts count_matches(const Corpus& gold, const Corpus& system,
                         EntityLabel label, MatchMode mode);

/// Full-task counts: a system span scores only when it matches a gold span
/// exactly and carries its concept. tp = n_correct under strict matching.
EvalCounts count_matches_full_task(const Corpus& gold, const Corpus& system,
                                   EntityLabel label);

/// Pooled-negatives accuracy. The negative pool is every span produced by
/// any run that is not in the gold standard, under exact span identity
/// (document, fragment set, class). Returns one accuracy per run, aligned
/// with per_run_counts, and writes tn into the counts.
std::vector<double> pooled_accuracy(const Corpus& gold,
                                    const std::vector<const Corpus*>& runs,
                                    EntityLabel label,
                                    std::vector<EvalCounts>& per_run_counts);

struct McNemarResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool significant = false;  // p < 0.01
};

/// Continuity-corrected McNemar test: chi2 = (|b - c| - 1)^2 / (b + c) on one
/// degree of freedom. Throws ValidationError when b + c == 0.
McNemarResult mcnemar(int64_t b, int64_t c);

struct Contingency {
  int64_t a = 0;  // both correct
  int64_t b = 0;  // only method 1 correct
  int64_t c = 0;  // only method 2 correct
  int64_t d = 0;  // both wrong
};

/// Paired trials are the gold spans of one class: a method is correct on a
/// gold span when its output matches it in the given mode.
Contingency mcnemar_table(const Corpus& gold, const Corpus& run1,
                          const Corpus& run2, EntityLabel label, MatchMode mode);

}  // namespace medtext
