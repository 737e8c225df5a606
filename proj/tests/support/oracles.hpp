#pragma once

// Reference implementations used only by the tests. Everything here is
// written from the definitions, independent of the library data structures
// it checks (beyond calling the model interfaces being exercised).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dcgen/corpus.hpp"
#include "dcgen/langmodel.hpp"
#include "dcgen/sif.hpp"
#include "dcgen/topic_syntax.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Likelihood-only beam search with the same termination rules as the decoder:
// EOS closures (legal once min_len is reached) go to a separate finished pool,
// the live beam keeps the top B token expansions, survivors at max_len are
// closed with a final EOS step when possible.

struct VanillaHyp {
  std::vector<int> tokens;
  double loglik = 0.0;
  bool finished = false;
};

inline std::vector<VanillaHyp> vanilla_beam(const dcgen::ConditionalLm& lm,
                                            std::span<const int> source,
                                            int beam, int max_len, int min_len) {
  const int vsize = lm.vocab_size();
  const int eos = lm.eos_event();
  auto better = [](const VanillaHyp& a, const VanillaHyp& b) {
    if (a.loglik != b.loglik) return a.loglik > b.loglik;
    return a.tokens < b.tokens;
  };

  std::vector<VanillaHyp> live{{}};
  std::vector<VanillaHyp> finished;
  std::vector<double> dist(static_cast<std::size_t>(vsize) + 1);
  for (int step = 1; step <= max_len; ++step) {
    std::vector<VanillaHyp> expansions;
    for (const VanillaHyp& h : live) {
      lm.next_logprobs(source, h.tokens, dist);
      if (static_cast<int>(h.tokens.size()) >= min_len &&
          std::isfinite(dist[static_cast<std::size_t>(eos)])) {
        VanillaHyp done = h;
        done.loglik += dist[static_cast<std::size_t>(eos)];
        done.finished = true;
        finished.push_back(std::move(done));
      }
      for (int w = 0; w < vsize; ++w) {
        if (!std::isfinite(dist[static_cast<std::size_t>(w)])) continue;
        VanillaHyp next = h;
        next.tokens.push_back(w);
        next.loglik += dist[static_cast<std::size_t>(w)];
        expansions.push_back(std::move(next));
      }
    }
    if (expansions.empty()) {
      live.clear();
      break;
    }
    std::sort(expansions.begin(), expansions.end(), better);
    if (static_cast<int>(expansions.size()) > beam) expansions.resize(beam);
    live = std::move(expansions);
  }
  std::vector<VanillaHyp> open;
  for (VanillaHyp& h : live) {
    double lp = static_cast<int>(h.tokens.size()) >= min_len
                    ? lm.next_logprob(source, h.tokens, eos)
                    : -std::numeric_limits<double>::infinity();
    if (std::isfinite(lp)) {
      h.loglik += lp;
      h.finished = true;
      finished.push_back(std::move(h));
    } else {
      open.push_back(std::move(h));
    }
  }
  std::vector<VanillaHyp>& pool = finished.empty() ? open : finished;
  std::sort(pool.begin(), pool.end(), better);
  return pool;
}

// ---------------------------------------------------------------------------
// Constraint terms recomputed from scratch out of the raw model tables.

inline std::pair<std::vector<double>, double> topic_dist(
    const dcgen::WordTopicStats& stats, const dcgen::TokenSeq& tokens) {
  const int K = stats.topics();
  std::vector<double> acc(static_cast<std::size_t>(K), 0.0);
  double z = 0.0;
  for (const auto& tok : tokens) {
    double cp = stats.content_prob(tok);
    if (cp == 0.0) continue;
    z += cp;
    std::vector<double> td = stats.topic_given_word(tok);
    for (int k = 0; k < K; ++k)
      acc[static_cast<std::size_t>(k)] += cp * td[static_cast<std::size_t>(k)];
  }
  if (z < 1e-9)
    return {std::vector<double>(static_cast<std::size_t>(K), K ? 1.0 / K : 0.0),
            0.0};
  for (double& p : acc) p /= z;
  return {acc, z};
}

// T term of the objective for a finished hypothesis, from the definition:
// dot(P(T|X), P(T|Y)) over content-probability-weighted word averages.
inline double batch_topic_term(const dcgen::WordTopicStats& stats,
                               const dcgen::TokenSeq& source,
                               const dcgen::TokenSeq& hyp) {
  if (stats.topics() < 1) return 0.0;
  auto [tx, zx] = topic_dist(stats, source);
  if (zx < 1e-9) return 0.0;
  auto [ty, zy] = topic_dist(stats, hyp);
  if (zy < 1e-9) return 0.0;
  double dot = 0.0;
  for (std::size_t k = 0; k < tx.size(); ++k) dot += tx[k] * ty[k];
  return dot;
}

inline double sif_weight(const dcgen::SifModel& sif, const std::string& word) {
  auto it = sif.unigram.find(word);
  double p = it == sif.unigram.end() ? 0.0 : it->second;
  return sif.a / (sif.a + p);
}

inline std::vector<double> raw_embedding(const dcgen::SifModel& sif,
                                         const dcgen::TokenSeq& tokens) {
  std::vector<double> v(sif.dim(), 0.0);
  int n = 0;
  for (const auto& tok : tokens) {
    const std::vector<double>* vec = sif.vectors.find(tok);
    if (!vec) continue;
    ++n;
    double w = sif_weight(sif, tok);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += w * (*vec)[j];
  }
  if (n > 0)
    for (double& x : v) x /= n;
  return v;
}

inline std::vector<double> projected_embedding(const dcgen::SifModel& sif,
                                               const dcgen::TokenSeq& tokens) {
  std::vector<double> v = raw_embedding(sif, tokens);
  double d = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) d += sif.u[j] * v[j];
  for (std::size_t j = 0; j < v.size(); ++j) v[j] -= d * sif.u[j];
  return v;
}

// S term from the definition: dot of the projected source embedding and the
// projected hypothesis embedding (equal to dot with the raw average because
// the projection is symmetric and idempotent).
inline double batch_semantic_term(const dcgen::SifModel& sif,
                                  const dcgen::TokenSeq& source,
                                  const dcgen::TokenSeq& hyp) {
  if (sif.dim() == 0) return 0.0;
  std::vector<double> q = projected_embedding(sif, source);
  std::vector<double> e = projected_embedding(sif, hyp);
  double dot = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) dot += q[j] * e[j];
  return dot;
}

// ---------------------------------------------------------------------------
// Exhaustive search over every token sequence up to max_len, scoring the full
// objective exactly as defined (biased logprobs for word steps, raw EOS step,
// constraint terms once the prefix is long enough).

struct ExhaustiveParams {
  double alpha = 0.0;
  double beta = 0.0;
  int max_len = 4;
  int min_len = 1;
  int constraint_start = 2;
  std::vector<char> bias_mask;  // indexed by word id; empty disables the bias
  double bias_value = 0.0;
};

struct ExhaustiveResult {
  std::vector<int> tokens;
  double total = -std::numeric_limits<double>::infinity();
  bool found = false;
};

namespace detail {

struct ExhaustiveSearch {
  const dcgen::ConditionalLm& lm;
  const dcgen::Vocabulary& vocab;
  const dcgen::WordTopicStats& stats;
  const dcgen::SifModel& sif;
  std::span<const int> source;
  const ExhaustiveParams& params;

  bool topic_on = false;
  std::vector<double> tx;
  std::vector<double> q;
  ExhaustiveResult best;
  std::vector<int> prefix;
  std::vector<std::vector<double>> dist_stack;

  double topic_term(double num, double z, int len) const {
    if (len < params.constraint_start) return 0.0;
    if (!topic_on || z < 1e-9) return 0.0;
    return num / z;
  }
  double semantic_term(double sum, int n, int len) const {
    if (len < params.constraint_start) return 0.0;
    if (n <= 0) return 0.0;
    return sum / n;
  }

  void consider(double loglik, double eos_lp, double tnum, double tz,
                double ssum, int sn) {
    int len = static_cast<int>(prefix.size());
    if (len < params.min_len || !std::isfinite(eos_lp)) return;
    double ll = loglik + eos_lp;
    double total = ll + params.alpha * topic_term(tnum, tz, len) +
                   params.beta * semantic_term(ssum, sn, len);
    if (!best.found || total > best.total ||
        (total == best.total && prefix < best.tokens)) {
      best.found = true;
      best.total = total;
      best.tokens = prefix;
    }
  }

  void walk(int depth, double loglik, double tnum, double tz, double ssum,
            int sn) {
    std::vector<double>& dist = dist_stack[static_cast<std::size_t>(depth)];
    lm.next_logprobs(source, prefix, dist);
    consider(loglik, dist[static_cast<std::size_t>(lm.eos_event())], tnum, tz,
             ssum, sn);
    if (depth == params.max_len) return;
    for (int w = 0; w < lm.vocab_size(); ++w) {
      double lp = dist[static_cast<std::size_t>(w)];
      if (!std::isfinite(lp)) continue;
      if (!params.bias_mask.empty() && params.bias_mask[static_cast<std::size_t>(w)])
        lp += params.bias_value;
      const std::string& tok = vocab.token(w);
      double cp = stats.topics() > 0 ? stats.content_prob(tok) : 0.0;
      double contrib = 0.0;
      if (topic_on && cp > 0.0) {
        std::vector<double> td = stats.topic_given_word(tok);
        double dot = 0.0;
        for (std::size_t k = 0; k < tx.size(); ++k) dot += tx[k] * td[k];
        contrib = cp * dot;
      }
      const std::vector<double>* vec = sif.vectors.find(tok);
      double emb = 0.0;
      int has = 0;
      if (vec && !q.empty()) {
        double dot = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) dot += q[j] * (*vec)[j];
        emb = sif_weight(sif, tok) * dot;
      }
      if (vec) has = 1;
      prefix.push_back(w);
      walk(depth + 1, loglik + lp, tnum + contrib, tz + cp, ssum + emb,
           sn + has);
      prefix.pop_back();
    }
  }
};

}  // namespace detail

inline ExhaustiveResult exhaustive_best(const dcgen::ConditionalLm& lm,
                                        const dcgen::Vocabulary& vocab,
                                        const dcgen::WordTopicStats& stats,
                                        const dcgen::SifModel& sif,
                                        const dcgen::TokenSeq& source_tokens,
                                        const ExhaustiveParams& params) {
  detail::ExhaustiveSearch search{lm,    vocab, stats, sif,
                                  {},    params, false, {},
                                  {},    {},    {},    {}};
  std::vector<int> source_ids = vocab.ids(source_tokens);
  search.source = source_ids;
  if (stats.topics() > 0) {
    auto [tx, zx] = topic_dist(stats, source_tokens);
    search.topic_on = zx >= 1e-9;
    search.tx = std::move(tx);
  }
  if (sif.dim() > 0) search.q = projected_embedding(sif, source_tokens);
  search.dist_stack.assign(static_cast<std::size_t>(params.max_len) + 1,
                           std::vector<double>(
                               static_cast<std::size_t>(lm.vocab_size()) + 1));
  search.walk(0, 0.0, 0.0, 0.0, 0.0, 0);
  return std::move(search.best);
}

// ---------------------------------------------------------------------------
// Dense reference EM for the lexical translation table. Keys are
// (source << 32) | target; the NULL word competes as an extra source position
// in every pair, exactly as in the definition of the model.

inline std::uint64_t slot_key(int src, int tgt) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(src)) << 32) |
         static_cast<std::uint32_t>(tgt);
}

inline std::unordered_map<std::uint64_t, double> dense_ibm1(
    const std::vector<dcgen::DialoguePair>& pairs, const dcgen::Vocabulary& vocab,
    int iterations) {
  const int null_id = dcgen::Vocabulary::kNullId;
  std::set<int> distinct_targets;
  std::unordered_map<std::uint64_t, double> t;
  for (const auto& p : pairs) {
    std::vector<int> src = vocab.ids(p.source);
    std::vector<int> tgt = vocab.ids(p.target);
    for (int y : tgt) {
      distinct_targets.insert(y);
      t[slot_key(null_id, y)] = 0.0;
      for (int x : src) t[slot_key(x, y)] = 0.0;
    }
  }
  double uniform = 1.0 / static_cast<double>(distinct_targets.size());
  for (auto& [k, v] : t) v = uniform;

  for (int it = 0; it < iterations; ++it) {
    std::unordered_map<std::uint64_t, double> counts;
    for (const auto& p : pairs) {
      std::vector<int> src = vocab.ids(p.source);
      std::vector<int> tgt = vocab.ids(p.target);
      for (int y : tgt) {
        double denom = t.at(slot_key(null_id, y));
        for (int x : src) denom += t.at(slot_key(x, y));
        counts[slot_key(null_id, y)] += t.at(slot_key(null_id, y)) / denom;
        for (int x : src) counts[slot_key(x, y)] += t.at(slot_key(x, y)) / denom;
      }
    }
    std::unordered_map<int, double> totals;
    for (const auto& [k, v] : counts) totals[static_cast<int>(k >> 32)] += v;
    for (auto& [k, v] : t) {
      auto it2 = counts.find(k);
      v = it2 == counts.end() ? 0.0 : it2->second / totals.at(static_cast<int>(k >> 32));
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Dominant eigenvector of the symmetric 2x2 matrix [[a, b], [b, c]], sign
// fixed so the first nonzero coordinate is positive.

inline std::array<double, 2> eig2x2_dominant(double a, double b, double c) {
  double disc = std::sqrt((a - c) * (a - c) + 4.0 * b * b);
  double lam = 0.5 * ((a + c) + disc);
  std::array<double, 2> v{};
  if (std::abs(b) > 1e-300) {
    v = {b, lam - a};
  } else {
    v = a >= c ? std::array<double, 2>{1.0, 0.0}
               : std::array<double, 2>{0.0, 1.0};
  }
  double norm = std::sqrt(v[0] * v[0] + v[1] * v[1]);
  v[0] /= norm;
  v[1] /= norm;
  double lead = v[0] != 0.0 ? v[0] : v[1];
  if (lead < 0.0) {
    v[0] = -v[0];
    v[1] = -v[1];
  }
  return v;
}

// ---------------------------------------------------------------------------
// Exact joint of the syntax-topic model for one document holding a single
// utterance, by direct evaluation of the collapsed Dirichlet-multinomial
// products (document-topic, topic-word for class 0, class-word for classes
// >= 1, and the class chain with a boundary state on both ends).

inline double hmmlda_log_joint(const std::vector<int>& words,
                               const std::vector<int>& z,
                               const std::vector<int>& c, int K, int C, int V,
                               double alpha, double beta, double delta,
                               double gamma) {
  const int n = static_cast<int>(words.size());
  const int boundary = C;
  double lp = 0.0;

  std::vector<long long> ndz(static_cast<std::size_t>(K), 0);
  for (int zi : z) ++ndz[static_cast<std::size_t>(zi)];
  lp += std::lgamma(K * alpha) - std::lgamma(K * alpha + n);
  for (long long cnt : ndz) lp += std::lgamma(alpha + cnt) - std::lgamma(alpha);

  std::map<std::pair<int, int>, long long> nzw;
  std::vector<long long> nz(static_cast<std::size_t>(K), 0);
  std::map<std::pair<int, int>, long long> ncw;
  std::vector<long long> nc(static_cast<std::size_t>(C), 0);
  for (int i = 0; i < n; ++i) {
    if (c[static_cast<std::size_t>(i)] == 0) {
      ++nzw[{z[static_cast<std::size_t>(i)], words[static_cast<std::size_t>(i)]}];
      ++nz[static_cast<std::size_t>(z[static_cast<std::size_t>(i)])];
    } else {
      ++ncw[{c[static_cast<std::size_t>(i)], words[static_cast<std::size_t>(i)]}];
      ++nc[static_cast<std::size_t>(c[static_cast<std::size_t>(i)])];
    }
  }
  for (int k = 0; k < K; ++k)
    lp += std::lgamma(V * beta) -
          std::lgamma(V * beta + nz[static_cast<std::size_t>(k)]);
  for (const auto& [key, cnt] : nzw)
    lp += std::lgamma(beta + cnt) - std::lgamma(beta);
  for (int cc = 1; cc < C; ++cc)
    lp += std::lgamma(V * delta) -
          std::lgamma(V * delta + nc[static_cast<std::size_t>(cc)]);
  for (const auto& [key, cnt] : ncw)
    lp += std::lgamma(delta + cnt) - std::lgamma(delta);

  std::map<std::pair<int, int>, long long> trans;
  std::vector<long long> row(static_cast<std::size_t>(C) + 1, 0);
  int prev = boundary;
  for (int i = 0; i <= n; ++i) {
    int next = i < n ? c[static_cast<std::size_t>(i)] : boundary;
    ++trans[{prev, next}];
    ++row[static_cast<std::size_t>(prev)];
    prev = next;
  }
  for (int r = 0; r <= C; ++r)
    lp += std::lgamma((C + 1) * gamma) -
          std::lgamma((C + 1) * gamma + row[static_cast<std::size_t>(r)]);
  for (const auto& [key, cnt] : trans)
    lp += std::lgamma(gamma + cnt) - std::lgamma(gamma);
  return lp;
}

// Normalized posterior over every (z, c) assignment of a single utterance,
// indexed by mixed radix: index = ((z1*K + z2)*K + ... )*C^n + (c1*C + ...).
inline std::vector<double> hmmlda_exact_posterior(const std::vector<int>& words,
                                                  int K, int C, int V,
                                                  double alpha, double beta,
                                                  double delta, double gamma) {
  const int n = static_cast<int>(words.size());
  long long zn = 1, cn = 1;
  for (int i = 0; i < n; ++i) {
    zn *= K;
    cn *= C;
  }
  std::vector<double> logp(static_cast<std::size_t>(zn * cn));
  std::vector<int> z(static_cast<std::size_t>(n)), c(static_cast<std::size_t>(n));
  for (long long zi = 0; zi < zn; ++zi) {
    long long rest = zi;
    for (int i = n - 1; i >= 0; --i) {
      z[static_cast<std::size_t>(i)] = static_cast<int>(rest % K);
      rest /= K;
    }
    for (long long ci = 0; ci < cn; ++ci) {
      long long rc = ci;
      for (int i = n - 1; i >= 0; --i) {
        c[static_cast<std::size_t>(i)] = static_cast<int>(rc % C);
        rc /= C;
      }
      logp[static_cast<std::size_t>(zi * cn + ci)] =
          hmmlda_log_joint(words, z, c, K, C, V, alpha, beta, delta, gamma);
    }
  }
  double mx = *std::max_element(logp.begin(), logp.end());
  double sum = 0.0;
  for (double& v : logp) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : logp) v /= sum;
  return logp;
}

}  // namespace oracle
