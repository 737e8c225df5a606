#pragma once

#include <cstdint>
#include <optional>
#include <unordered_set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcgen/corpus.hpp"
#include "dcgen/langmodel.hpp"
#include "dcgen/sif.hpp"
#include "dcgen/topic_syntax.hpp"

namespace dcgen {

// Additive log-probability bonus for the dominant source topic's word set.
struct TaBias {
  double bias = 1.0;
  int word_set_size = 20;
};

struct DecoderConfig {
  int beam_size = 10;
  double alpha = 5.0;  // topic-constraint weight
  double beta = 2.0;   // semantic-constraint weight
  int max_len = 25;
  int min_len = 3;
  // Constraint terms start counting once a hypothesis has this many tokens;
  // shorter prefixes are ranked by likelihood alone.
  int constraint_start_step = 2;
  std::optional<TaBias> ta_bias;
  double mmi_lambda = 0.0;
  bool mmi_keep_forward = true;
  std::uint64_t seed = 0;  // reserved; ranking is already deterministic

  void validate() const;
};

// Everything about one source sentence the per-step scorer needs: its topic
// distribution, its projected embedding, and lazily filled per-word
// contributions to both constraint terms.
class SourceContext {
 public:
  SourceContext(TokenSeq source, const WordTopicStats& stats,
                const SifModel& sif, const Vocabulary& vocab,
                const DecoderConfig& config,
                const std::vector<std::vector<int>>* topic_word_sets);

  const TokenSeq& source_tokens() const { return source_tokens_; }
  std::span<const int> source_ids() const { return source_ids_; }
  const Vocabulary& vocab() const { return *vocab_; }

  bool topic_enabled() const { return topic_enabled_; }
  const std::vector<double>& source_topic_dist() const { return topic_dist_; }
  double source_topic_z() const { return topic_z_; }
  const std::vector<double>& source_embedding() const { return q_; }

  // Per-word contributions, cached on first use.
  double content_prob(int word) const;   // P(C=0|w)
  double topic_contrib(int word) const;  // P(C=0|w) * (tX . P(T|w))
  double emb_contrib(int word) const;    // q . weight(w) vec(w), 0 if no vector
  bool has_vector(int word) const;

  bool bias_enabled() const { return !bias_mask_.empty(); }
  double bias_value() const { return bias_value_; }
  bool biased(int word) const {
    return !bias_mask_.empty() && bias_mask_[static_cast<std::size_t>(word)];
  }

 private:
  struct WordCache {
    bool filled = false;
    bool has_vector = false;
    double content_prob = 0.0;
    double topic_contrib = 0.0;
    double emb_contrib = 0.0;
  };
  const WordCache& word(int word) const;

  TokenSeq source_tokens_;
  std::vector<int> source_ids_;
  const WordTopicStats* stats_ = nullptr;
  const SifModel* sif_ = nullptr;
  const Vocabulary* vocab_ = nullptr;

  bool topic_enabled_ = false;
  std::vector<double> topic_dist_;  // tX
  double topic_z_ = 0.0;
  std::vector<double> q_;  // projected source embedding

  double bias_value_ = 0.0;
  std::vector<char> bias_mask_;

  mutable std::vector<WordCache> cache_;
};

// Convenience wrapper around the constructor, mirroring the rest of the
// module's free-function style.
SourceContext build_context(TokenSeq source, const WordTopicStats& stats,
                            const SifModel& sif, const Vocabulary& vocab,
                            const DecoderConfig& config,
                            const std::vector<std::vector<int>>* topic_word_sets =
                                nullptr);

struct Hypothesis {
  std::vector<int> tokens;
  double loglik = 0.0;
  double topic_num = 0.0;  // running sum of topic contributions
  double topic_z = 0.0;    // running sum of content probabilities
  double emb_sum = 0.0;    // running sum of embedding contributions
  int n_inv = 0;           // tokens that carry word vectors
  bool finished = false;
};

// Current decomposed objective value: loglik + alpha*T + beta*S. Both
// constraint terms are 0 until the hypothesis reaches
// config.constraint_start_step tokens; T is also 0 when the source or the
// hypothesis has no content words (running Z below 1e-9).
double score(const Hypothesis& hyp, const SourceContext& ctx,
             const DecoderConfig& config);

struct Candidate {
  std::vector<int> tokens;
  double loglik = 0.0;
  double topic_score = 0.0;     // T
  double semantic_score = 0.0;  // S
  double reverse_score = 0.0;   // log P(X|Y), set by mmi_rerank
  bool reranked = false;
  double total = 0.0;
  bool finished = true;
};

// Beam search over the constrained objective. Each step expands every live
// hypothesis with all vocabulary tokens (EOS allowed once min_len is met;
// EOS closures are reserved in a finished pool and never occupy beam
// slots), keeps the top beam_size expansions by score with ties broken by
// token ids, and stops after max_len steps. Returns every finished
// candidate sorted by score; if nothing could finish, the surviving
// unfinished hypotheses are returned with finished=false.
std::vector<Candidate> beam_search(const ConditionalLm& lm,
                                   const SourceContext& ctx,
                                   const DecoderConfig& config);

// Reranks candidates by total + mmi_lambda * log P(X|Y) where the reverse
// model scores the source given the candidate. keep_forward=false drops the
// forward term from the key. Stable descending sort; candidates' total is
// replaced by the rerank key.
std::vector<Candidate> mmi_rerank(std::vector<Candidate> candidates,
                                  std::span<const int> source,
                                  const ConditionalLm& reverse_lm,
                                  double mmi_lambda, bool keep_forward = true);

// Next-token log-probabilities split into a stop-word table and a
// topic-word table, each sorted by log-probability (descending).
struct DiagnoseTables {
  std::vector<std::pair<std::string, double>> stop_words;
  std::vector<std::pair<std::string, double>> topic_words;
};

DiagnoseTables diagnose_split(const ConditionalLm& lm, const Vocabulary& vocab,
                              std::span<const int> source,
                              std::span<const int> prefix,
                              const std::unordered_set<std::string>& stop_list,
                              const std::unordered_set<std::string>& topic_list);

}  // namespace dcgen
