#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dcgen/corpus.hpp"

namespace dcgen {

using IdSeq = std::vector<int>;
using IdPairs = std::vector<std::pair<IdSeq, IdSeq>>;

// Contract for conditional next-token models. Events are vocab ids 0..V-1
// plus the end-of-sequence slot at index V. Implementations must produce a
// distribution whose exponentials sum to 1 within 1e-6.
class ConditionalLm {
 public:
  virtual ~ConditionalLm() = default;

  virtual int vocab_size() const = 0;
  int eos_event() const { return vocab_size(); }

  // Fills out[0..V] with log-probabilities of the next event given the
  // source sentence and the target prefix (both as vocab ids, no BOS/EOS).
  virtual void next_logprobs(std::span<const int> source,
                             std::span<const int> prefix,
                             std::span<double> out) const = 0;

  // Log-probability of a single next event; default reads the full
  // distribution, implementations may shortcut.
  virtual double next_logprob(std::span<const int> source,
                              std::span<const int> prefix, int event) const;

  // Sum of per-step log-probabilities over the target plus the final EOS
  // term. An empty target scores just the EOS event.
  virtual double sequence_logprob(std::span<const int> source,
                                  std::span<const int> target) const;
};

// Backoff n-gram model with absolute discounting. Unigram level is plain
// maximum likelihood over tokens plus one EOS per sentence. Sequences are
// padded with a single BOS; at positions with fewer than n-1 context tokens
// the model simply starts from the highest order that has a full context.
class NGramModel {
 public:
  NGramModel() = default;

  int order() const { return order_; }
  double discount() const { return discount_; }
  int vocab_size() const { return vocab_size_; }
  int eos_event() const { return vocab_size_; }

  // P(event | context). context holds vocab ids with a leading BOS at true
  // sentence start; only the last order-1 entries are used. event may be any
  // vocab id or the EOS slot.
  double prob(std::span<const int> context, int event) const;

  // Dense next-event distribution (linear probabilities), size V+1.
  void next_probs(std::span<const int> context, std::span<double> out) const;

  // Log-probability of a full sentence: BOS start, per-token factors, EOS.
  double sequence_logprob(std::span<const int> sentence) const;

  void save(const std::string& path) const;
  static NGramModel load(const std::string& path);

  // Structural check: every stored n-gram's history must itself be stored at
  // the next lower order (the lone-BOS context is the one exception).
  void validate() const;

  friend NGramModel train_ngram(const std::vector<TokenSeq>& corpus,
                                const Vocabulary& vocab, int n, double discount);

 private:
  struct ContextStat {
    long long total = 0;
    long long distinct = 0;
  };

  static std::string encode(std::span<const int> ids);

  int order_ = 0;
  double discount_ = 0.75;
  int vocab_size_ = 0;
  long long unigram_total_ = 0;
  // index k-1 holds the order-k tables
  std::vector<std::unordered_map<std::string, long long>> events_;
  std::vector<std::unordered_map<std::string, ContextStat>> contexts_;

  void rebuild_contexts();
};

NGramModel train_ngram(const std::vector<TokenSeq>& corpus,
                       const Vocabulary& vocab, int n, double discount = 0.75);

// Lexical translation probabilities t(target | source) with a NULL source
// row. Rows are kept sorted by target id.
class LexicalTransTable {
 public:
  using Row = std::vector<std::pair<int, double>>;

  LexicalTransTable() = default;
  LexicalTransTable(int vocab_size, std::unordered_map<int, Row> rows);

  int vocab_size() const { return vocab_size_; }
  const Row* row(int src) const;
  double prob(int src, int tgt) const;
  std::vector<int> source_ids() const;  // sorted

  // Every row must sum to 1 within 1e-6.
  void validate() const;

  void save(const std::string& path, const Vocabulary& vocab) const;
  static LexicalTransTable load(const std::string& path, const Vocabulary& vocab);

 private:
  int vocab_size_ = 0;
  std::unordered_map<int, Row> rows_;
};

// Expectation-maximization for the lexical table. The parallel step cuts the
// pair list into fixed chunks and folds expected counts in chunk order, so
// its result is independent of the thread count; the serial step is the
// plain reference the tests compare against (equal to ~1e-12).
class Ibm1Trainer {
 public:
  // pairs are id-mapped (UNK already applied), without NULL; the trainer
  // adds the NULL alignment candidate itself.
  Ibm1Trainer(const IdPairs& pairs, int vocab_size);

  void step(int threads);
  void step_serial();
  int iterations_done() const { return iterations_; }

  LexicalTransTable table() const;

 private:
  std::vector<double> expected_counts(int threads) const;
  void normalize(std::vector<double> counts);

  const IdPairs& pairs_;
  int vocab_size_ = 0;
  int iterations_ = 0;
  std::vector<std::uint64_t> slot_keys_;                // canonical order
  std::unordered_map<std::uint64_t, int> slot_index_;   // (src,tgt) -> slot
  std::vector<double> probs_;                           // per slot
};

LexicalTransTable train_ibm1(const std::vector<DialoguePair>& pairs,
                             const Vocabulary& vocab, int em_iterations,
                             int threads = 0);

// Per-step mixture of the n-gram model and the lexical channel:
//   P(w) = lambda * P_ngram(w | prefix) + (1-lambda) * P_channel(w | source)
// for vocabulary events. The channel knows nothing about EOS, so EOS keeps
// its full n-gram probability and the whole distribution is divided by
// 1 + (1-lambda) * P_ngram(EOS | prefix) to normalize.
class MixtureLm : public ConditionalLm {
 public:
  MixtureLm() = default;
  MixtureLm(NGramModel ngram, LexicalTransTable channel, double lambda_lm);

  int vocab_size() const override { return ngram_.vocab_size(); }
  void next_logprobs(std::span<const int> source, std::span<const int> prefix,
                     std::span<double> out) const override;
  double next_logprob(std::span<const int> source, std::span<const int> prefix,
                      int event) const override;

  const NGramModel& ngram() const { return ngram_; }
  const LexicalTransTable& channel() const { return channel_; }
  double lambda_lm() const { return lambda_; }

  // Dense P(w | source) over vocab ids; source positions without a lexical
  // row are left out of the average so the distribution still sums to 1.
  std::vector<double> channel_dist(std::span<const int> source) const;

 private:
  const std::vector<double>& cached_channel(std::span<const int> source) const;

  NGramModel ngram_;
  LexicalTransTable channel_;
  double lambda_ = 0.6;
};

// Conditional model read from a file of precomputed log-probabilities, one
// dense V+1 row per decode step. The distribution depends only on the step
// index, which makes externally scored models pluggable.
class GridLm : public ConditionalLm {
 public:
  GridLm() = default;
  GridLm(int vocab_size, std::vector<std::vector<double>> rows);

  int vocab_size() const override { return vocab_size_; }
  std::size_t steps() const { return rows_.size(); }
  void next_logprobs(std::span<const int> source, std::span<const int> prefix,
                     std::span<double> out) const override;

  void save(const std::string& path) const;
  static GridLm load(const std::string& path);

 private:
  int vocab_size_ = 0;
  std::vector<std::vector<double>> rows_;
};

}  // namespace dcgen
