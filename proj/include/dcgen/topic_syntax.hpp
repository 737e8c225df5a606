#pragma once

#include <cstdint>
#include <unordered_set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dcgen/corpus.hpp"
#include "dcgen/rng.hpp"

namespace dcgen {

// One conversation: a list of utterances sharing a topic mixture.
using Document = std::vector<TokenSeq>;

struct HmmLdaConfig {
  int topics = 50;       // K
  int classes = 20;      // C; class 0 emits from the topic component
  double alpha_t = 1.0;  // document-topic prior (50/K for the defaults)
  double beta_t = 0.01;  // topic-word prior
  double delta_c = 0.01; // class-word prior
  double gamma_c = 0.1;  // class-transition prior
  int burn_in = 2500;
  std::uint64_t seed = 1;
  int sample_count = 1;  // average word stats over this many final sweeps

  // Training requirements: topics >= 2, classes >= 2, priors > 0,
  // burn_in >= 1, sample_count in [1, burn_in].
  void validate() const;
};

// Per-word topic statistics derived from a sampled state: P(T|w) and the
// probability P(C=0|w) that the word is emitted by the topic component.
// Words never seen in training fall back to content 0 and a uniform simplex.
class WordTopicStats {
 public:
  struct Entry {
    double content_prob = 0.0;
    std::vector<double> topic_dist;
  };

  WordTopicStats() = default;
  WordTopicStats(int topics, std::unordered_map<std::string, Entry> entries);

  int topics() const { return topics_; }
  bool contains(const std::string& word) const;
  double content_prob(const std::string& word) const;
  std::vector<double> topic_given_word(const std::string& word) const;
  const std::unordered_map<std::string, Entry>& entries() const {
    return entries_;
  }

  // word<TAB>P(C=0|w)<TAB>p1,p2,...,pK per line
  void save(const std::string& path) const;
  static WordTopicStats load(const std::string& path);

 private:
  int topics_ = 0;
  std::unordered_map<std::string, Entry> entries_;
};

// Syntax-topic model state under collapsed Gibbs sampling. Every token
// carries a topic z and a class c; class 0 emits from its topic's word
// distribution, classes >= 1 emit from class word distributions, and classes
// form a per-utterance Markov chain with a boundary state on both ends
// (boundary id = classes()).
class HmmLdaState {
 public:
  HmmLdaState() = default;

  // Maps documents to vocab ids (UNK applied), drops empty utterances and
  // draws uniform random initial assignments from the config seed.
  static HmmLdaState init(const HmmLdaConfig& config,
                          const std::vector<Document>& documents,
                          const Vocabulary& vocab);

  // One full sweep: for each token in order, resample z then c from the
  // full conditionals with the token's own counts removed. Requires
  // assignments (a state loaded from file has only count tables).
  void sweep();
  int sweeps_done() const { return sweeps_; }
  bool has_assignments() const { return !docs_.empty(); }

  int topics() const { return config_.topics; }
  int classes() const { return config_.classes; }
  int boundary_class() const { return config_.classes; }
  int vocab_size() const { return vocab_size_; }
  std::size_t doc_count() const { return doc_count_; }
  std::size_t token_count() const { return token_count_; }
  const HmmLdaConfig& config() const { return config_; }

  // count table accessors
  long long doc_topic(std::size_t d, int z) const;
  long long topic_word(int z, int w) const;
  long long topic_total(int z) const;
  long long class_word(int c, int w) const;  // c >= 1
  long long class_total(int c) const;
  long long transition(int from, int to) const;  // boundary id allowed
  long long transition_row_total(int from) const;

  // current assignments (training states only)
  int z_at(std::size_t d, std::size_t u, std::size_t i) const;
  int c_at(std::size_t d, std::size_t u, std::size_t i) const;

  // Unnormalized full-conditional weights for the token at (d, u, i), with
  // that token's counts excluded; the state is left unchanged. Shared with
  // sweep() so hand checks exercise the sampling code itself.
  std::vector<double> topic_conditional(std::size_t d, std::size_t u,
                                        std::size_t i);
  std::vector<double> class_conditional(std::size_t d, std::size_t u,
                                        std::size_t i);

  // Relabels topics: new label perm[z] replaces z everywhere.
  void permute_topics(const std::vector<int>& perm);

  // Recomputes every count table from the assignments and compares with the
  // incrementally maintained ones; throws on any mismatch.
  void check_consistency() const;

  // Count tables only; a loaded state can serve statistics but not sweep.
  void save(const std::string& path) const;
  static HmmLdaState load(const std::string& path);

 private:
  void remove_topic(std::size_t d, int w, int z, int c);
  void insert_topic(std::size_t d, int w, int z, int c);
  void remove_class(int w, int z, int c, int prev, int next);
  void insert_class(int w, int z, int c, int prev, int next);
  std::vector<double> topic_weights(std::size_t d, int w, int c) const;
  std::vector<double> class_weights(int w, int z, int prev, int next) const;

  HmmLdaConfig config_;
  int vocab_size_ = 0;
  std::size_t doc_count_ = 0;
  std::size_t token_count_ = 0;
  int sweeps_ = 0;
  Rng rng_{1};

  std::vector<std::vector<std::vector<int>>> docs_;  // doc -> utt -> word ids
  std::vector<std::vector<std::vector<int>>> z_, c_;

  std::vector<long long> n_dz_;   // doc_count x K
  std::vector<long long> n_zw_;   // K x V
  std::vector<long long> n_z_;    // K
  std::vector<long long> n_cw_;   // C x V (row 0 unused)
  std::vector<long long> n_c_;    // C
  std::vector<long long> n_cc_;   // (C+1) x (C+1)
  std::vector<long long> n_cc_row_;  // C+1
};

// Runs config.burn_in sweeps from a fresh random state and derives word
// statistics from the final sample (or the average of the last
// config.sample_count samples).
std::pair<HmmLdaState, WordTopicStats> train_hmmlda(
    const HmmLdaConfig& config, const std::vector<Document>& documents,
    const Vocabulary& vocab);

// The estimator behind WordTopicStats, applied to one state:
//   P(C=0|w) = n(w, c=0) / n(w)
//   P(T=z|w) = (n(w, z, c=0) + smoothing) / (n(w, c=0) + K * smoothing)
WordTopicStats word_stats(const HmmLdaState& state, const Vocabulary& vocab,
                          double smoothing);
WordTopicStats word_stats(const HmmLdaState& state, const Vocabulary& vocab);

// Sentence topic estimate: P(T|S) = (1/Z) sum_w P(T|w) P(C=0|w) with
// Z = sum_w P(C=0|w). A sentence with Z below 1e-9 yields the degenerate
// result (uniform simplex, Z = 0); callers score its constraint as 0.
std::pair<std::vector<double>, double> sentence_topic_dist(
    const WordTopicStats& stats, const TokenSeq& sentence);

// The n highest-emission-probability words of a topic, stop words removed,
// ties broken by vocabulary id.
std::vector<std::string> top_topic_words(const HmmLdaState& state,
                                         const Vocabulary& vocab, int topic,
                                         int n,
                                         const std::unordered_set<std::string>& stop_list);

}  // namespace dcgen
