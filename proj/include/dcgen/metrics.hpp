#pragma once

#include <cstdint>
#include <unordered_set>
#include <span>
#include <string>
#include <vector>

#include "dcgen/corpus.hpp"

namespace dcgen {

struct DistinctStat {
  long long types = 0;
  double ratio = 0.0;
};

// Columns in report order: distinct-1, distinct-2, BLEU-1, average length,
// stop-word percentage. bleu1 is NaN when no references were supplied.
struct MetricsReport {
  DistinctStat distinct1;
  DistinctStat distinct2;
  double bleu1 = 0.0;
  double avg_len = 0.0;
  double stopword_pct = 0.0;
};

// Count of judgment labels collected for one system.
struct JudgmentCounts {
  long long no = 0;
  long long unsure = 0;
  long long yes = 0;

  long long total() const { return no + unsure + yes; }
};

// Distinct n-gram types pooled over all responses, and the type/token ratio.
// n must be 1 or 2. Throws if the pool contains no n-grams.
DistinctStat distinct_n(const std::vector<TokenSeq>& responses, int n);

// Corpus-level unigram BLEU on a percent scale: clipped unigram precision
// times the standard brevity penalty. One reference per response.
double bleu1(const std::vector<TokenSeq>& responses,
             const std::vector<TokenSeq>& references);

// Percentage of tokens, pooled over all responses, that appear in stop_list.
double stopword_pct(const std::vector<TokenSeq>& responses,
                    const std::unordered_set<std::string>& stop_list);

// Mean token count per response.
double avg_len(const std::vector<TokenSeq>& responses);

// All of the above in one pass. references may be empty (bleu1 becomes NaN).
MetricsReport compute_report(const std::vector<TokenSeq>& responses,
                             const std::vector<TokenSeq>& references,
                             const std::unordered_set<std::string>& stop_list);

// Paired bootstrap significance test on per-item scores. Resamples item
// indices with replacement; the returned two-sided p-value is twice the
// fraction of resamples whose mean difference ties with zero or has the
// opposite sign from the observed difference, clamped to [0,1].
double bootstrap_diff_test(std::span<const double> a, std::span<const double> b,
                           int iterations, std::uint64_t seed);

// Expands label counts to a score vector (no=0, unsure=0.5, yes=1) in that
// fixed order, for feeding unpaired count data into bootstrap_diff_test.
std::vector<double> to_outcomes(const JudgmentCounts& counts);

// Exact two-sided binomial test: the total probability, under rate p0, of
// every outcome at most as likely as the observed one. Log-space tails.
double binomial_test(long long successes, long long trials, double p0 = 0.5);

// Plain-text table of one or more named reports, columns aligned.
std::string format_report_table(const std::vector<std::string>& names,
                                const std::vector<MetricsReport>& reports);

// The same data as a JSON object keyed by system name.
std::string format_report_json(const std::vector<std::string>& names,
                               const std::vector<MetricsReport>& reports);

}  // namespace dcgen
