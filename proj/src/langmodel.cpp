#include "dcgen/langmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "dcgen/kernels.hpp"

namespace dcgen {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// strtod-based so "-inf" round-trips (stream extraction rejects it)
double parse_double_tok(const std::string& tok, const std::string& where) {
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || tok.empty())
    throw std::runtime_error(where + ": bad number '" + tok + "'");
  return v;
}

void append_id(std::string& key, int id) {
  auto u = static_cast<std::uint32_t>(id);
  key.push_back(static_cast<char>(u & 0xff));
  key.push_back(static_cast<char>((u >> 8) & 0xff));
  key.push_back(static_cast<char>((u >> 16) & 0xff));
  key.push_back(static_cast<char>((u >> 24) & 0xff));
}

std::vector<int> decode_key(const std::string& key) {
  std::vector<int> ids(key.size() / 4);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::uint32_t u = 0;
    for (int b = 3; b >= 0; --b)
      u = (u << 8) | static_cast<unsigned char>(key[i * 4 + b]);
    ids[i] = static_cast<int>(u);
  }
  return ids;
}

}  // namespace

double ConditionalLm::next_logprob(std::span<const int> source,
                                   std::span<const int> prefix,
                                   int event) const {
  if (event < 0 || event > vocab_size())
    throw std::out_of_range("next_logprob: event out of range");
  std::vector<double> buf(static_cast<std::size_t>(vocab_size()) + 1);
  next_logprobs(source, prefix, buf);
  return buf[static_cast<std::size_t>(event)];
}

double ConditionalLm::sequence_logprob(std::span<const int> source,
                                       std::span<const int> target) const {
  double lp = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i)
    lp += next_logprob(source, target.first(i), target[i]);
  lp += next_logprob(source, target, eos_event());
  return lp;
}

std::string NGramModel::encode(std::span<const int> ids) {
  std::string key;
  key.reserve(ids.size() * 4);
  for (int id : ids) append_id(key, id);
  return key;
}

NGramModel train_ngram(const std::vector<TokenSeq>& corpus,
                       const Vocabulary& vocab, int n, double discount) {
  if (n < 1) throw std::invalid_argument("train_ngram: order must be >= 1");
  if (!(discount > 0.0 && discount < 1.0))
    throw std::invalid_argument("train_ngram: discount must lie in (0,1)");
  if (corpus.empty()) throw std::invalid_argument("train_ngram: empty corpus");

  NGramModel m;
  m.order_ = n;
  m.discount_ = discount;
  m.vocab_size_ = static_cast<int>(vocab.size());
  m.events_.resize(static_cast<std::size_t>(n));
  m.contexts_.resize(static_cast<std::size_t>(n));
  const int eos = m.vocab_size_;

  for (const auto& sent : corpus) {
    std::vector<int> ctx;
    ctx.reserve(sent.size() + 1);
    ctx.push_back(Vocabulary::kBosId);
    std::vector<int> ids;
    ids.reserve(sent.size());
    for (const auto& tok : sent) ids.push_back(vocab.id(tok));
    for (std::size_t i = 0; i <= ids.size(); ++i) {
      int event = i < ids.size() ? ids[i] : eos;
      for (int k = 1; k <= n; ++k) {
        std::size_t need = static_cast<std::size_t>(k - 1);
        if (ctx.size() < need) break;
        std::string key =
            NGramModel::encode(std::span<const int>(ctx).last(need));
        append_id(key, event);
        ++m.events_[static_cast<std::size_t>(k - 1)][key];
      }
      if (i < ids.size()) ctx.push_back(ids[i]);
    }
  }
  m.rebuild_contexts();
  m.validate();
  return m;
}

void NGramModel::rebuild_contexts() {
  contexts_.assign(events_.size(), {});
  for (std::size_t k = 0; k < events_.size(); ++k) {
    for (const auto& [key, count] : events_[k]) {
      std::string hist = key.substr(0, key.size() - 4);
      auto& st = contexts_[k][hist];
      st.total += count;
      st.distinct += 1;
    }
  }
  unigram_total_ = 0;
  if (!contexts_.empty()) {
    auto it = contexts_[0].find(std::string());
    if (it != contexts_[0].end()) unigram_total_ = it->second.total;
  }
}

double NGramModel::prob(std::span<const int> context, int event) const {
  if (order_ < 1) throw std::logic_error("ngram: model not trained");
  if (event < 0 || event > vocab_size_)
    throw std::out_of_range("ngram: event out of range");
  std::string ekey;
  append_id(ekey, event);

  double p = 0.0;
  if (unigram_total_ > 0) {
    auto it = events_[0].find(ekey);
    if (it != events_[0].end())
      p = static_cast<double>(it->second) / static_cast<double>(unigram_total_);
  }
  for (int k = 2; k <= order_; ++k) {
    std::size_t need = static_cast<std::size_t>(k - 1);
    if (context.size() < need) break;
    std::string hkey = encode(context.last(need));
    auto cit = contexts_[static_cast<std::size_t>(k - 1)].find(hkey);
    if (cit == contexts_[static_cast<std::size_t>(k - 1)].end() ||
        cit->second.total == 0)
      continue;
    auto eit = events_[static_cast<std::size_t>(k - 1)].find(hkey + ekey);
    double c = eit == events_[static_cast<std::size_t>(k - 1)].end()
                   ? 0.0
                   : static_cast<double>(eit->second);
    double total = static_cast<double>(cit->second.total);
    double bow = discount_ * static_cast<double>(cit->second.distinct) / total;
    p = std::max(c - discount_, 0.0) / total + bow * p;
  }
  return p;
}

void NGramModel::next_probs(std::span<const int> context,
                            std::span<double> out) const {
  if (out.size() != static_cast<std::size_t>(vocab_size_) + 1)
    throw std::invalid_argument("ngram: output span has wrong size");
  for (int e = 0; e <= vocab_size_; ++e)
    out[static_cast<std::size_t>(e)] = prob(context, e);
}

double NGramModel::sequence_logprob(std::span<const int> sentence) const {
  std::vector<int> ctx;
  ctx.reserve(sentence.size() + 1);
  ctx.push_back(Vocabulary::kBosId);
  double lp = 0.0;
  for (int id : sentence) {
    lp += std::log(prob(ctx, id));
    ctx.push_back(id);
  }
  lp += std::log(prob(ctx, eos_event()));
  return lp;
}

void NGramModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write ngram file: " + path);
  out << "NGRAM v1\n";
  out << "order " << order_ << '\n';
  out << "discount " << fmt17(discount_) << '\n';
  out << "vocab_size " << vocab_size_ << '\n';
  for (std::size_t k = 0; k < events_.size(); ++k) {
    std::vector<std::pair<std::vector<int>, long long>> entries;
    entries.reserve(events_[k].size());
    for (const auto& [key, count] : events_[k])
      entries.emplace_back(decode_key(key), count);
    std::sort(entries.begin(), entries.end());
    out << "counts " << (k + 1) << ' ' << entries.size() << '\n';
    for (const auto& [ids, count] : entries) {
      for (int id : ids) out << id << ' ';
      out << count << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

NGramModel NGramModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ngram file: " + path);
  std::string line;
  auto next_line = [&]() -> std::string {
    if (!std::getline(in, line))
      throw std::runtime_error(path + ": truncated file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  if (next_line() != "NGRAM v1")
    throw std::runtime_error(path + ": bad header, expected 'NGRAM v1'");

  NGramModel m;
  {
    std::istringstream ss(next_line());
    std::string key;
    ss >> key >> m.order_;
    if (key != "order" || ss.fail() || m.order_ < 1)
      throw std::runtime_error(path + ": bad order line");
  }
  {
    std::istringstream ss(next_line());
    std::string key, val;
    ss >> key >> val;
    if (key != "discount" || ss.fail())
      throw std::runtime_error(path + ": bad discount line");
    m.discount_ = parse_double_tok(val, path);
    if (!(m.discount_ > 0.0 && m.discount_ < 1.0))
      throw std::runtime_error(path + ": discount out of range");
  }
  {
    std::istringstream ss(next_line());
    std::string key;
    ss >> key >> m.vocab_size_;
    if (key != "vocab_size" || ss.fail() || m.vocab_size_ < 0)
      throw std::runtime_error(path + ": bad vocab_size line");
  }
  m.events_.resize(static_cast<std::size_t>(m.order_));
  for (int k = 1; k <= m.order_; ++k) {
    std::istringstream ss(next_line());
    std::string key;
    int section = 0;
    std::size_t n_entries = 0;
    ss >> key >> section >> n_entries;
    if (key != "counts" || section != k || ss.fail())
      throw std::runtime_error(path + ": bad counts header for order " +
                               std::to_string(k));
    for (std::size_t e = 0; e < n_entries; ++e) {
      std::istringstream es(next_line());
      std::vector<int> ids(static_cast<std::size_t>(k));
      long long count = 0;
      for (int& id : ids) es >> id;
      es >> count;
      if (es.fail() || count < 1)
        throw std::runtime_error(path + ": bad count entry");
      for (std::size_t j = 0; j + 1 < ids.size(); ++j)
        if (ids[j] < 0 || ids[j] > m.vocab_size_)
          throw std::runtime_error(path + ": id out of range");
      if (ids.back() < 0 || ids.back() > m.vocab_size_)
        throw std::runtime_error(path + ": id out of range");
      std::string ekey = encode(ids);
      if (!m.events_[static_cast<std::size_t>(k - 1)].emplace(ekey, count).second)
        throw std::runtime_error(path + ": duplicate entry");
    }
  }
  m.rebuild_contexts();
  m.validate();
  return m;
}

void NGramModel::validate() const {
  if (order_ < 1) throw std::runtime_error("ngram: order < 1");
  if (unigram_total_ <= 0) throw std::runtime_error("ngram: no events");
  std::string bos_key;
  append_id(bos_key, Vocabulary::kBosId);
  for (std::size_t k = 1; k < events_.size(); ++k) {
    for (const auto& [key, count] : events_[k]) {
      (void)count;
      std::string hist = key.substr(0, key.size() - 4);
      if (hist == bos_key) continue;  // sentence-start context, BOS is no event
      if (!events_[k - 1].count(hist))
        throw std::runtime_error("ngram: history missing from lower order");
    }
  }
}

LexicalTransTable::LexicalTransTable(int vocab_size,
                                     std::unordered_map<int, Row> rows)
    : vocab_size_(vocab_size), rows_(std::move(rows)) {
  for (auto& [src, row] : rows_) {
    if (src < 0 || src >= vocab_size_)
      throw std::invalid_argument("lexical table: source id out of range");
    std::sort(row.begin(), row.end());
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i].first < 0 || row[i].first >= vocab_size_)
        throw std::invalid_argument("lexical table: target id out of range");
      if (i > 0 && row[i].first == row[i - 1].first)
        throw std::invalid_argument("lexical table: duplicate target in row");
      if (!(row[i].second >= 0.0))
        throw std::invalid_argument("lexical table: negative probability");
    }
  }
}

const LexicalTransTable::Row* LexicalTransTable::row(int src) const {
  auto it = rows_.find(src);
  return it == rows_.end() ? nullptr : &it->second;
}

double LexicalTransTable::prob(int src, int tgt) const {
  const Row* r = row(src);
  if (!r) return 0.0;
  auto it = std::lower_bound(r->begin(), r->end(), std::make_pair(tgt, 0.0),
                             [](const auto& a, const auto& b) {
                               return a.first < b.first;
                             });
  if (it == r->end() || it->first != tgt) return 0.0;
  return it->second;
}

std::vector<int> LexicalTransTable::source_ids() const {
  std::vector<int> ids;
  ids.reserve(rows_.size());
  for (const auto& [src, row] : rows_) ids.push_back(src);
  std::sort(ids.begin(), ids.end());
  return ids;
}

void LexicalTransTable::validate() const {
  for (const auto& [src, row] : rows_) {
    double sum = 0.0;
    for (const auto& [tgt, p] : row) sum += p;
    if (std::abs(sum - 1.0) > 1e-6)
      throw std::runtime_error("lexical table: row " + std::to_string(src) +
                               " sums to " + fmt17(sum));
  }
}

void LexicalTransTable::save(const std::string& path,
                             const Vocabulary& vocab) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write lexical table: " + path);
  for (int src : source_ids()) {
    for (const auto& [tgt, p] : *row(src))
      out << vocab.token(src) << '\t' << vocab.token(tgt) << '\t' << fmt17(p)
          << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

LexicalTransTable LexicalTransTable::load(const std::string& path,
                                          const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexical table: " + path);
  std::unordered_map<int, Row> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto where = path + ":" + std::to_string(lineno);
    auto tab1 = line.find('\t');
    auto tab2 = tab1 == std::string::npos ? std::string::npos
                                          : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos)
      throw std::runtime_error(where + ": expected src<TAB>tgt<TAB>prob");
    std::string src = line.substr(0, tab1);
    std::string tgt = line.substr(tab1 + 1, tab2 - tab1 - 1);
    double p = parse_double_tok(line.substr(tab2 + 1), where);
    if (!vocab.contains(src))
      throw std::runtime_error(where + ": unknown source token " + src);
    if (!vocab.contains(tgt))
      throw std::runtime_error(where + ": unknown target token " + tgt);
    rows[vocab.id(src)].emplace_back(vocab.id(tgt), p);
  }
  LexicalTransTable table(static_cast<int>(vocab.size()), std::move(rows));
  table.validate();
  return table;
}

Ibm1Trainer::Ibm1Trainer(const IdPairs& pairs, int vocab_size)
    : pairs_(pairs), vocab_size_(vocab_size) {
  if (pairs_.empty()) throw std::invalid_argument("ibm1: no pairs");
  std::unordered_set<int> target_types;
  auto check = [&](int id) {
    if (id < 0 || id >= vocab_size_)
      throw std::invalid_argument("ibm1: id out of vocabulary range");
  };
  for (const auto& [src, tgt] : pairs_) {
    if (src.empty() || tgt.empty())
      throw std::invalid_argument("ibm1: empty pair side");
    for (int y : tgt) {
      check(y);
      target_types.insert(y);
      auto add = [&](int x) {
        check(x);
        std::uint64_t key = (static_cast<std::uint64_t>(x) << 32) |
                            static_cast<std::uint32_t>(y);
        if (slot_index_.emplace(key, static_cast<int>(slot_keys_.size())).second)
          slot_keys_.push_back(key);
      };
      add(Vocabulary::kNullId);
      for (int x : src) add(x);
    }
  }
  probs_.assign(slot_keys_.size(),
                1.0 / static_cast<double>(target_types.size()));
}

std::vector<double> Ibm1Trainer::expected_counts(int threads) const {
  auto chunk_fn = [&](std::size_t begin, std::size_t end,
                      std::vector<double>& acc) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& [src, tgt] = pairs_[i];
      for (int y : tgt) {
        auto slot = [&](int x) {
          std::uint64_t key = (static_cast<std::uint64_t>(x) << 32) |
                              static_cast<std::uint32_t>(y);
          return slot_index_.at(key);
        };
        double denom = probs_[static_cast<std::size_t>(slot(Vocabulary::kNullId))];
        for (int x : src) denom += probs_[static_cast<std::size_t>(slot(x))];
        auto bump = [&](int x) {
          int s = slot(x);
          acc[static_cast<std::size_t>(s)] +=
              probs_[static_cast<std::size_t>(s)] / denom;
        };
        bump(Vocabulary::kNullId);
        for (int x : src) bump(x);
      }
    }
  };
  auto join = [](std::vector<double>& into, const std::vector<double>& part) {
    for (std::size_t i = 0; i < into.size(); ++i) into[i] += part[i];
  };
  return kernels::chunked_reduce(pairs_.size(), threads,
                                 std::vector<double>(slot_keys_.size(), 0.0),
                                 chunk_fn, join);
}

void Ibm1Trainer::step(int threads) {
  normalize(expected_counts(threads));
  ++iterations_;
}

void Ibm1Trainer::step_serial() {
  std::vector<double> acc(slot_keys_.size(), 0.0);
  for (const auto& [src, tgt] : pairs_) {
    for (int y : tgt) {
      auto slot = [&](int x) {
        std::uint64_t key = (static_cast<std::uint64_t>(x) << 32) |
                            static_cast<std::uint32_t>(y);
        return slot_index_.at(key);
      };
      double denom = probs_[static_cast<std::size_t>(slot(Vocabulary::kNullId))];
      for (int x : src) denom += probs_[static_cast<std::size_t>(slot(x))];
      auto bump = [&](int x) {
        int s = slot(x);
        acc[static_cast<std::size_t>(s)] +=
            probs_[static_cast<std::size_t>(s)] / denom;
      };
      bump(Vocabulary::kNullId);
      for (int x : src) bump(x);
    }
  }
  normalize(std::move(acc));
  ++iterations_;
}

void Ibm1Trainer::normalize(std::vector<double> counts) {
  std::unordered_map<int, double> totals;
  for (std::size_t s = 0; s < slot_keys_.size(); ++s)
    totals[static_cast<int>(slot_keys_[s] >> 32)] += counts[s];
  for (std::size_t s = 0; s < slot_keys_.size(); ++s)
    probs_[s] = counts[s] / totals[static_cast<int>(slot_keys_[s] >> 32)];
}

LexicalTransTable Ibm1Trainer::table() const {
  std::unordered_map<int, LexicalTransTable::Row> rows;
  for (std::size_t s = 0; s < slot_keys_.size(); ++s) {
    int src = static_cast<int>(slot_keys_[s] >> 32);
    int tgt = static_cast<int>(slot_keys_[s] & 0xffffffffu);
    rows[src].emplace_back(tgt, probs_[s]);
  }
  return LexicalTransTable(vocab_size_, std::move(rows));
}

LexicalTransTable train_ibm1(const std::vector<DialoguePair>& pairs,
                             const Vocabulary& vocab, int em_iterations,
                             int threads) {
  if (em_iterations < 1)
    throw std::invalid_argument("train_ibm1: need at least one iteration");
  IdPairs ids;
  ids.reserve(pairs.size());
  for (const auto& p : pairs)
    ids.emplace_back(vocab.ids(p.source), vocab.ids(p.target));
  Ibm1Trainer trainer(ids, static_cast<int>(vocab.size()));
  for (int i = 0; i < em_iterations; ++i) trainer.step(threads);
  return trainer.table();
}

MixtureLm::MixtureLm(NGramModel ngram, LexicalTransTable channel,
                     double lambda_lm)
    : ngram_(std::move(ngram)), channel_(std::move(channel)), lambda_(lambda_lm) {
  if (!(lambda_ >= 0.0 && lambda_ <= 1.0))
    throw std::invalid_argument("mixture: lambda_lm must lie in [0,1]");
  if (ngram_.vocab_size() != channel_.vocab_size())
    throw std::invalid_argument("mixture: vocab size mismatch");
  if (lambda_ < 1.0 && channel_.row(Vocabulary::kNullId) == nullptr)
    throw std::invalid_argument("mixture: channel table lacks a NULL row");
}

std::vector<double> MixtureLm::channel_dist(std::span<const int> source) const {
  std::vector<double> dist(static_cast<std::size_t>(vocab_size()), 0.0);
  int included = 0;
  auto add_row = [&](int x) {
    const LexicalTransTable::Row* r = channel_.row(x);
    if (!r) return;
    ++included;
    for (const auto& [tgt, p] : *r) dist[static_cast<std::size_t>(tgt)] += p;
  };
  add_row(Vocabulary::kNullId);
  for (int x : source) add_row(x);
  if (included > 0)
    for (double& d : dist) d /= included;
  return dist;
}

const std::vector<double>& MixtureLm::cached_channel(
    std::span<const int> source) const {
  struct Cache {
    const void* owner = nullptr;
    std::vector<int> source;
    std::vector<double> dist;
  };
  static thread_local Cache cache;
  if (cache.owner != this || cache.source.size() != source.size() ||
      !std::equal(source.begin(), source.end(), cache.source.begin())) {
    cache.owner = this;
    cache.source.assign(source.begin(), source.end());
    cache.dist = channel_dist(source);
  }
  return cache.dist;
}

void MixtureLm::next_logprobs(std::span<const int> source,
                              std::span<const int> prefix,
                              std::span<double> out) const {
  const std::size_t v = static_cast<std::size_t>(vocab_size());
  if (out.size() != v + 1)
    throw std::invalid_argument("mixture: output span has wrong size");
  std::vector<int> ctx;
  ctx.reserve(prefix.size() + 1);
  ctx.push_back(Vocabulary::kBosId);
  ctx.insert(ctx.end(), prefix.begin(), prefix.end());
  std::vector<double> png(v + 1);
  ngram_.next_probs(ctx, png);
  const auto& pch = cached_channel(source);
  double z = 1.0 + (1.0 - lambda_) * png[v];
  for (std::size_t w = 0; w < v; ++w)
    out[w] = std::log((lambda_ * png[w] + (1.0 - lambda_) * pch[w]) / z);
  out[v] = std::log(png[v] / z);
}

double MixtureLm::next_logprob(std::span<const int> source,
                               std::span<const int> prefix, int event) const {
  if (event < 0 || event > vocab_size())
    throw std::out_of_range("mixture: event out of range");
  std::vector<int> ctx;
  ctx.reserve(prefix.size() + 1);
  ctx.push_back(Vocabulary::kBosId);
  ctx.insert(ctx.end(), prefix.begin(), prefix.end());
  double png_eos = ngram_.prob(ctx, ngram_.eos_event());
  double z = 1.0 + (1.0 - lambda_) * png_eos;
  if (event == vocab_size()) return std::log(png_eos / z);
  double png = ngram_.prob(ctx, event);
  double pch = cached_channel(source)[static_cast<std::size_t>(event)];
  return std::log((lambda_ * png + (1.0 - lambda_) * pch) / z);
}

GridLm::GridLm(int vocab_size, std::vector<std::vector<double>> rows)
    : vocab_size_(vocab_size), rows_(std::move(rows)) {
  if (vocab_size_ < 0) throw std::invalid_argument("grid: bad vocab size");
  for (const auto& row : rows_) {
    if (row.size() != static_cast<std::size_t>(vocab_size_) + 1)
      throw std::invalid_argument("grid: row has wrong width");
    double sum = 0.0;
    for (double lp : row) sum += std::exp(lp);
    if (std::abs(sum - 1.0) > 1e-6)
      throw std::invalid_argument("grid: row does not normalize");
  }
}

void GridLm::next_logprobs(std::span<const int> source,
                           std::span<const int> prefix,
                           std::span<double> out) const {
  (void)source;
  if (out.size() != static_cast<std::size_t>(vocab_size_) + 1)
    throw std::invalid_argument("grid: output span has wrong size");
  if (prefix.size() >= rows_.size())
    throw std::out_of_range("grid: decode step beyond stored rows");
  const auto& row = rows_[prefix.size()];
  std::copy(row.begin(), row.end(), out.begin());
}

void GridLm::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write grid file: " + path);
  out << "GRID v1\n";
  out << "vocab_size " << vocab_size_ << '\n';
  out << "steps " << rows_.size() << '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ' ';
      out << fmt17(row[i]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

GridLm GridLm::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grid file: " + path);
  std::string line;
  auto next_line = [&]() -> std::string {
    if (!std::getline(in, line))
      throw std::runtime_error(path + ": truncated file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  if (next_line() != "GRID v1")
    throw std::runtime_error(path + ": bad header, expected 'GRID v1'");
  int vocab_size = 0;
  std::size_t steps = 0;
  {
    std::istringstream ss(next_line());
    std::string key;
    ss >> key >> vocab_size;
    if (key != "vocab_size" || ss.fail())
      throw std::runtime_error(path + ": bad vocab_size line");
  }
  {
    std::istringstream ss(next_line());
    std::string key;
    ss >> key >> steps;
    if (key != "steps" || ss.fail())
      throw std::runtime_error(path + ": bad steps line");
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    std::istringstream ss(next_line());
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(vocab_size) + 1);
    std::string tok;
    while (ss >> tok) row.push_back(parse_double_tok(tok, path));
    rows.push_back(std::move(row));
  }
  return GridLm(vocab_size, std::move(rows));
}

}  // namespace dcgen
