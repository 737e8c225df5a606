#include "dcgen/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace dcgen {

void DecoderConfig::validate() const {
  if (beam_size < 1) throw std::invalid_argument("beam_size must be >= 1");
  if (min_len < 1) throw std::invalid_argument("min_len must be >= 1");
  if (max_len < min_len)
    throw std::invalid_argument("max_len must be >= min_len");
  if (alpha < 0.0 || beta < 0.0)
    throw std::invalid_argument("constraint weights must be >= 0");
  if (constraint_start_step < 1)
    throw std::invalid_argument("constraint_start_step must be >= 1");
  if (ta_bias && ta_bias->word_set_size < 1)
    throw std::invalid_argument("ta_bias word_set_size must be >= 1");
}

SourceContext::SourceContext(TokenSeq source, const WordTopicStats& stats,
                             const SifModel& sif, const Vocabulary& vocab,
                             const DecoderConfig& config,
                             const std::vector<std::vector<int>>* topic_word_sets)
    : source_tokens_(std::move(source)),
      stats_(&stats),
      sif_(&sif),
      vocab_(&vocab) {
  config.validate();
  source_ids_ = vocab.ids(source_tokens_);
  if (stats.topics() > 0) {
    auto [dist, z] = sentence_topic_dist(stats, source_tokens_);
    topic_dist_ = std::move(dist);
    topic_z_ = z;
    topic_enabled_ = topic_z_ > 0.0;
  }
  q_ = sif.embed(source_tokens_);
  if (config.ta_bias && topic_enabled_ && topic_word_sets != nullptr) {
    int dominant = 0;
    for (int k = 1; k < static_cast<int>(topic_dist_.size()); ++k)
      if (topic_dist_[k] > topic_dist_[dominant]) dominant = k;
    if (dominant >= static_cast<int>(topic_word_sets->size()))
      throw std::invalid_argument("topic word sets do not cover topic " +
                                  std::to_string(dominant));
    bias_mask_.assign(static_cast<std::size_t>(vocab.size()), 0);
    for (int w : (*topic_word_sets)[static_cast<std::size_t>(dominant)]) {
      if (w < 0 || w >= vocab.size())
        throw std::invalid_argument("topic word set id out of range");
      bias_mask_[static_cast<std::size_t>(w)] = 1;
    }
    bias_value_ = config.ta_bias->bias;
  }
  cache_.resize(static_cast<std::size_t>(vocab.size()));
}

const SourceContext::WordCache& SourceContext::word(int word) const {
  if (word < 0 || word >= static_cast<int>(cache_.size()))
    throw std::out_of_range("word id out of range");
  WordCache& c = cache_[static_cast<std::size_t>(word)];
  if (c.filled) return c;
  c.filled = true;
  const std::string& tok = vocab_->token(word);
  c.content_prob = stats_->content_prob(tok);
  if (topic_enabled_ && c.content_prob > 0.0) {
    std::vector<double> tw = stats_->topic_given_word(tok);
    double dot = 0.0;
    for (std::size_t k = 0; k < tw.size(); ++k) dot += topic_dist_[k] * tw[k];
    c.topic_contrib = c.content_prob * dot;
  }
  if (const std::vector<double>* vec = sif_->vectors.find(tok)) {
    c.has_vector = true;
    if (!q_.empty()) {
      double wgt = sif_->weight(tok);
      double dot = 0.0;
      for (std::size_t j = 0; j < q_.size(); ++j) dot += q_[j] * (*vec)[j];
      c.emb_contrib = wgt * dot;
    }
  }
  return c;
}

double SourceContext::content_prob(int w) const { return word(w).content_prob; }
double SourceContext::topic_contrib(int w) const { return word(w).topic_contrib; }
double SourceContext::emb_contrib(int w) const { return word(w).emb_contrib; }
bool SourceContext::has_vector(int w) const { return word(w).has_vector; }

SourceContext build_context(TokenSeq source, const WordTopicStats& stats,
                            const SifModel& sif, const Vocabulary& vocab,
                            const DecoderConfig& config,
                            const std::vector<std::vector<int>>* topic_word_sets) {
  return SourceContext(std::move(source), stats, sif, vocab, config,
                       topic_word_sets);
}

namespace {

void constraint_terms(const Hypothesis& hyp, const SourceContext& ctx,
                      const DecoderConfig& config, double* topic,
                      double* semantic) {
  *topic = 0.0;
  *semantic = 0.0;
  if (static_cast<int>(hyp.tokens.size()) < config.constraint_start_step)
    return;
  if (ctx.topic_enabled() && hyp.topic_z >= 1e-9)
    *topic = hyp.topic_num / hyp.topic_z;
  if (hyp.n_inv > 0) *semantic = hyp.emb_sum / hyp.n_inv;
}

}  // namespace

double score(const Hypothesis& hyp, const SourceContext& ctx,
             const DecoderConfig& config) {
  double topic = 0.0;
  double semantic = 0.0;
  constraint_terms(hyp, ctx, config, &topic, &semantic);
  return hyp.loglik + config.alpha * topic + config.beta * semantic;
}

namespace {

struct Scored {
  Hypothesis hyp;
  double sc = 0.0;
};

bool better(const Scored& a, const Scored& b) {
  if (a.sc != b.sc) return a.sc > b.sc;
  return a.hyp.tokens < b.hyp.tokens;
}

std::vector<Candidate> to_candidates(std::vector<Scored> pool,
                                     const SourceContext& ctx,
                                     const DecoderConfig& config,
                                     bool finished) {
  std::sort(pool.begin(), pool.end(), better);
  std::vector<Candidate> out;
  out.reserve(pool.size());
  for (Scored& s : pool) {
    Candidate c;
    constraint_terms(s.hyp, ctx, config, &c.topic_score, &c.semantic_score);
    c.loglik = s.hyp.loglik;
    c.total = s.sc;
    c.finished = finished;
    c.tokens = std::move(s.hyp.tokens);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

std::vector<Candidate> beam_search(const ConditionalLm& lm,
                                   const SourceContext& ctx,
                                   const DecoderConfig& config) {
  config.validate();
  const int vsize = ctx.vocab().size();
  if (lm.vocab_size() != vsize)
    throw std::invalid_argument("model and vocabulary sizes differ");
  const int eos = lm.eos_event();
  const std::span<const int> src = ctx.source_ids();

  std::vector<Scored> live;
  live.push_back({Hypothesis{}, 0.0});
  std::vector<Scored> finished;  // EOS closures; never occupy beam slots
  std::vector<double> dist(static_cast<std::size_t>(vsize) + 1);

  for (int step = 1; step <= config.max_len; ++step) {
    std::vector<Scored> expansions;
    expansions.reserve(live.size() * 8);
    for (const Scored& s : live) {
      lm.next_logprobs(src, s.hyp.tokens, dist);
      if (ctx.bias_enabled()) {
        for (int w = 0; w < vsize; ++w)
          if (ctx.biased(w)) dist[static_cast<std::size_t>(w)] += ctx.bias_value();
      }
      if (static_cast<int>(s.hyp.tokens.size()) >= config.min_len &&
          std::isfinite(dist[static_cast<std::size_t>(eos)])) {
        Hypothesis done = s.hyp;
        done.loglik += dist[static_cast<std::size_t>(eos)];
        done.finished = true;
        double sc = score(done, ctx, config);
        finished.push_back({std::move(done), sc});
      }
      for (int w = 0; w < vsize; ++w) {
        double lp = dist[static_cast<std::size_t>(w)];
        if (!std::isfinite(lp)) continue;
        Hypothesis next = s.hyp;
        next.tokens.push_back(w);
        next.loglik += lp;
        next.topic_num += ctx.topic_contrib(w);
        next.topic_z += ctx.content_prob(w);
        if (ctx.has_vector(w)) {
          next.emb_sum += ctx.emb_contrib(w);
          ++next.n_inv;
        }
        double sc = score(next, ctx, config);
        expansions.push_back({std::move(next), sc});
      }
    }
    if (expansions.empty()) {
      live.clear();
      break;
    }
    std::size_t keep = std::min(expansions.size(),
                                static_cast<std::size_t>(config.beam_size));
    std::partial_sort(expansions.begin(),
                      expansions.begin() + static_cast<std::ptrdiff_t>(keep),
                      expansions.end(), better);
    expansions.resize(keep);
    live = std::move(expansions);
  }

  // Whatever survives the length cap is closed with a raw EOS step if the
  // model allows it; otherwise it stays open and is only reported when no
  // hypothesis anywhere managed to finish.
  std::vector<Scored> open;
  for (Scored& s : live) {
    bool closed = false;
    if (static_cast<int>(s.hyp.tokens.size()) >= config.min_len) {
      double lp = lm.next_logprob(src, s.hyp.tokens, eos);
      if (std::isfinite(lp)) {
        s.hyp.loglik += lp;
        s.hyp.finished = true;
        s.sc = score(s.hyp, ctx, config);
        finished.push_back(std::move(s));
        closed = true;
      }
    }
    if (!closed) open.push_back(std::move(s));
  }

  if (!finished.empty())
    return to_candidates(std::move(finished), ctx, config, true);
  return to_candidates(std::move(open), ctx, config, false);
}

std::vector<Candidate> mmi_rerank(std::vector<Candidate> candidates,
                                  std::span<const int> source,
                                  const ConditionalLm& reverse_lm,
                                  double mmi_lambda, bool keep_forward) {
  if (candidates.empty())
    throw std::invalid_argument("no candidates to rerank");
  for (Candidate& c : candidates) {
    double rev = reverse_lm.sequence_logprob(c.tokens, source);
    c.reverse_score = rev;
    c.reranked = true;
    c.total = (keep_forward ? c.total : 0.0) + mmi_lambda * rev;
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.total > b.total;
                   });
  return candidates;
}

DiagnoseTables diagnose_split(const ConditionalLm& lm, const Vocabulary& vocab,
                              std::span<const int> source,
                              std::span<const int> prefix,
                              const std::unordered_set<std::string>& stop_list,
                              const std::unordered_set<std::string>& topic_list) {
  if (lm.vocab_size() != vocab.size())
    throw std::invalid_argument("model and vocabulary sizes differ");
  std::vector<double> dist(static_cast<std::size_t>(lm.vocab_size()) + 1);
  lm.next_logprobs(source, prefix, dist);
  DiagnoseTables tables;
  for (int w = 0; w < lm.vocab_size(); ++w) {
    const std::string& tok = vocab.token(w);
    double lp = dist[static_cast<std::size_t>(w)];
    if (stop_list.count(tok)) tables.stop_words.emplace_back(tok, lp);
    if (topic_list.count(tok)) tables.topic_words.emplace_back(tok, lp);
  }
  auto by_logprob = [](const std::pair<std::string, double>& a,
                       const std::pair<std::string, double>& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  std::sort(tables.stop_words.begin(), tables.stop_words.end(), by_logprob);
  std::sort(tables.topic_words.begin(), tables.topic_words.end(), by_logprob);
  return tables;
}

}  // namespace dcgen
