#include "dcgen/topic_syntax.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dcgen {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double_tok(const std::string& tok, const std::string& where) {
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || tok.empty())
    throw std::runtime_error(where + ": bad number '" + tok + "'");
  return v;
}

}  // namespace

void HmmLdaConfig::validate() const {
  if (topics < 2) throw std::invalid_argument("hmmlda: topics must be >= 2");
  if (classes < 2) throw std::invalid_argument("hmmlda: classes must be >= 2");
  if (!(alpha_t > 0.0 && beta_t > 0.0 && delta_c > 0.0 && gamma_c > 0.0))
    throw std::invalid_argument("hmmlda: priors must be positive");
  if (burn_in < 1) throw std::invalid_argument("hmmlda: burn_in must be >= 1");
  if (sample_count < 1 || sample_count > burn_in)
    throw std::invalid_argument("hmmlda: sample_count must lie in [1, burn_in]");
}

WordTopicStats::WordTopicStats(int topics,
                               std::unordered_map<std::string, Entry> entries)
    : topics_(topics), entries_(std::move(entries)) {
  if (topics_ < 1)
    throw std::invalid_argument("word stats: need at least one topic");
  for (const auto& [word, e] : entries_) {
    if (e.topic_dist.size() != static_cast<std::size_t>(topics_))
      throw std::invalid_argument("word stats: wrong simplex size for " + word);
    if (!(e.content_prob >= 0.0 && e.content_prob <= 1.0))
      throw std::invalid_argument("word stats: content_prob out of [0,1]");
    double sum = 0.0;
    for (double p : e.topic_dist) {
      if (!(p >= 0.0))
        throw std::invalid_argument("word stats: negative topic probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("word stats: simplex of " + word +
                                  " sums to " + fmt17(sum));
  }
}

bool WordTopicStats::contains(const std::string& word) const {
  return entries_.count(word) != 0;
}

double WordTopicStats::content_prob(const std::string& word) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? 0.0 : it->second.content_prob;
}

std::vector<double> WordTopicStats::topic_given_word(
    const std::string& word) const {
  auto it = entries_.find(word);
  if (it == entries_.end())
    return std::vector<double>(static_cast<std::size_t>(topics_),
                               1.0 / static_cast<double>(topics_));
  return it->second.topic_dist;
}

void WordTopicStats::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write word stats: " + path);
  std::vector<const std::string*> words;
  words.reserve(entries_.size());
  for (const auto& [word, e] : entries_) words.push_back(&word);
  std::sort(words.begin(), words.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });
  for (const auto* word : words) {
    const Entry& e = entries_.at(*word);
    out << *word << '\t' << fmt17(e.content_prob) << '\t';
    for (std::size_t t = 0; t < e.topic_dist.size(); ++t) {
      if (t) out << ',';
      out << fmt17(e.topic_dist[t]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

WordTopicStats WordTopicStats::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open word stats: " + path);
  std::unordered_map<std::string, Entry> entries;
  int topics = 0;
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
      throw std::runtime_error(where + ": expected word<TAB>p<TAB>simplex");
    std::string word = line.substr(0, tab1);
    Entry e;
    e.content_prob = parse_double_tok(line.substr(tab1 + 1, tab2 - tab1 - 1), where);
    std::string rest = line.substr(tab2 + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      auto comma = rest.find(',', pos);
      auto piece = rest.substr(pos, comma == std::string::npos ? std::string::npos
                                                               : comma - pos);
      e.topic_dist.push_back(parse_double_tok(piece, where));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (topics == 0) topics = static_cast<int>(e.topic_dist.size());
    if (!entries.emplace(std::move(word), std::move(e)).second)
      throw std::runtime_error(where + ": duplicate word");
  }
  if (entries.empty())
    throw std::runtime_error(path + ": no word statistics found");
  return WordTopicStats(topics, std::move(entries));
}

HmmLdaState HmmLdaState::init(const HmmLdaConfig& config,
                              const std::vector<Document>& documents,
                              const Vocabulary& vocab) {
  if (documents.empty())
    throw std::invalid_argument("hmmlda: empty document list");
  if (config.topics < 1 || config.classes < 1)
    throw std::invalid_argument("hmmlda: need at least one topic and class");
  if (!(config.alpha_t > 0.0 && config.beta_t > 0.0 && config.delta_c > 0.0 &&
        config.gamma_c > 0.0))
    throw std::invalid_argument("hmmlda: priors must be positive");

  HmmLdaState st;
  st.config_ = config;
  st.vocab_size_ = static_cast<int>(vocab.size());
  st.doc_count_ = documents.size();
  st.rng_ = Rng(config.seed);

  const int K = config.topics, C = config.classes, V = st.vocab_size_;
  const int B = C;  // boundary state
  st.n_dz_.assign(st.doc_count_ * static_cast<std::size_t>(K), 0);
  st.n_zw_.assign(static_cast<std::size_t>(K) * V, 0);
  st.n_z_.assign(static_cast<std::size_t>(K), 0);
  st.n_cw_.assign(static_cast<std::size_t>(C) * V, 0);
  st.n_c_.assign(static_cast<std::size_t>(C), 0);
  st.n_cc_.assign(static_cast<std::size_t>(C + 1) * (C + 1), 0);
  st.n_cc_row_.assign(static_cast<std::size_t>(C + 1), 0);

  st.docs_.resize(st.doc_count_);
  st.z_.resize(st.doc_count_);
  st.c_.resize(st.doc_count_);
  for (std::size_t d = 0; d < documents.size(); ++d) {
    for (const auto& utt : documents[d]) {
      if (utt.empty()) continue;
      std::vector<int> ids = vocab.ids(utt);
      std::vector<int> zs(ids.size()), cs(ids.size());
      for (std::size_t i = 0; i < ids.size(); ++i) {
        zs[i] = static_cast<int>(st.rng_.uniform_int(
            static_cast<std::size_t>(K)));
        cs[i] = static_cast<int>(st.rng_.uniform_int(
            static_cast<std::size_t>(C)));
      }
      for (std::size_t i = 0; i < ids.size(); ++i) {
        st.insert_topic(d, ids[i], zs[i], cs[i]);
        int w = ids[i];
        int c = cs[i];
        if (c == 0) {
          // emission already counted by insert_topic when c == 0
        } else {
          ++st.n_cw_[static_cast<std::size_t>(c) * V + w];
          ++st.n_c_[static_cast<std::size_t>(c)];
        }
        int prev = i == 0 ? B : cs[i - 1];
        ++st.n_cc_[static_cast<std::size_t>(prev) * (C + 1) + c];
        ++st.n_cc_row_[static_cast<std::size_t>(prev)];
      }
      int last = cs.back();
      ++st.n_cc_[static_cast<std::size_t>(last) * (C + 1) + B];
      ++st.n_cc_row_[static_cast<std::size_t>(last)];
      st.token_count_ += ids.size();
      st.docs_[d].push_back(std::move(ids));
      st.z_[d].push_back(std::move(zs));
      st.c_[d].push_back(std::move(cs));
    }
  }
  if (st.token_count_ == 0)
    throw std::invalid_argument("hmmlda: documents contain no tokens");
  return st;
}

void HmmLdaState::remove_topic(std::size_t d, int w, int z, int c) {
  --n_dz_[d * static_cast<std::size_t>(config_.topics) + z];
  if (c == 0) {
    --n_zw_[static_cast<std::size_t>(z) * vocab_size_ + w];
    --n_z_[static_cast<std::size_t>(z)];
  }
}

void HmmLdaState::insert_topic(std::size_t d, int w, int z, int c) {
  ++n_dz_[d * static_cast<std::size_t>(config_.topics) + z];
  if (c == 0) {
    ++n_zw_[static_cast<std::size_t>(z) * vocab_size_ + w];
    ++n_z_[static_cast<std::size_t>(z)];
  }
}

void HmmLdaState::remove_class(int w, int z, int c, int prev, int next) {
  const int cp = config_.classes + 1;
  --n_cc_[static_cast<std::size_t>(prev) * cp + c];
  --n_cc_row_[static_cast<std::size_t>(prev)];
  --n_cc_[static_cast<std::size_t>(c) * cp + next];
  --n_cc_row_[static_cast<std::size_t>(c)];
  if (c == 0) {
    --n_zw_[static_cast<std::size_t>(z) * vocab_size_ + w];
    --n_z_[static_cast<std::size_t>(z)];
  } else {
    --n_cw_[static_cast<std::size_t>(c) * vocab_size_ + w];
    --n_c_[static_cast<std::size_t>(c)];
  }
}

void HmmLdaState::insert_class(int w, int z, int c, int prev, int next) {
  const int cp = config_.classes + 1;
  ++n_cc_[static_cast<std::size_t>(prev) * cp + c];
  ++n_cc_row_[static_cast<std::size_t>(prev)];
  ++n_cc_[static_cast<std::size_t>(c) * cp + next];
  ++n_cc_row_[static_cast<std::size_t>(c)];
  if (c == 0) {
    ++n_zw_[static_cast<std::size_t>(z) * vocab_size_ + w];
    ++n_z_[static_cast<std::size_t>(z)];
  } else {
    ++n_cw_[static_cast<std::size_t>(c) * vocab_size_ + w];
    ++n_c_[static_cast<std::size_t>(c)];
  }
}

std::vector<double> HmmLdaState::topic_weights(std::size_t d, int w,
                                               int c) const {
  const int K = config_.topics, V = vocab_size_;
  std::vector<double> wgt(static_cast<std::size_t>(K));
  for (int t = 0; t < K; ++t) {
    double v = static_cast<double>(
                   n_dz_[d * static_cast<std::size_t>(K) + t]) +
               config_.alpha_t;
    if (c == 0) {
      v *= (static_cast<double>(n_zw_[static_cast<std::size_t>(t) * V + w]) +
            config_.beta_t) /
           (static_cast<double>(n_z_[static_cast<std::size_t>(t)]) +
            V * config_.beta_t);
    }
    wgt[static_cast<std::size_t>(t)] = v;
  }
  return wgt;
}

std::vector<double> HmmLdaState::class_weights(int w, int z, int prev,
                                               int next) const {
  const int C = config_.classes, V = vocab_size_;
  const int cp = C + 1;
  std::vector<double> wgt(static_cast<std::size_t>(C));
  for (int cc = 0; cc < C; ++cc) {
    double emis;
    if (cc == 0) {
      emis = (static_cast<double>(n_zw_[static_cast<std::size_t>(z) * V + w]) +
              config_.beta_t) /
             (static_cast<double>(n_z_[static_cast<std::size_t>(z)]) +
              V * config_.beta_t);
    } else {
      emis = (static_cast<double>(n_cw_[static_cast<std::size_t>(cc) * V + w]) +
              config_.delta_c) /
             (static_cast<double>(n_c_[static_cast<std::size_t>(cc)]) +
              V * config_.delta_c);
    }
    double num1 =
        static_cast<double>(n_cc_[static_cast<std::size_t>(prev) * cp + cc]) +
        config_.gamma_c;
    double num2 =
        static_cast<double>(n_cc_[static_cast<std::size_t>(cc) * cp + next]) +
        config_.gamma_c + ((prev == cc && cc == next) ? 1.0 : 0.0);
    double den =
        static_cast<double>(n_cc_row_[static_cast<std::size_t>(cc)]) +
        cp * config_.gamma_c + ((prev == cc) ? 1.0 : 0.0);
    wgt[static_cast<std::size_t>(cc)] = emis * num1 * num2 / den;
  }
  return wgt;
}

void HmmLdaState::sweep() {
  if (!has_assignments())
    throw std::logic_error("hmmlda: state has no assignments; cannot sweep");
  const int B = boundary_class();
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    for (std::size_t u = 0; u < docs_[d].size(); ++u) {
      const auto& ids = docs_[d][u];
      auto& zs = z_[d][u];
      auto& cs = c_[d][u];
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const int w = ids[i];
        int z = zs[i], c = cs[i];
        remove_topic(d, w, z, c);
        z = static_cast<int>(rng_.categorical(topic_weights(d, w, c)));
        zs[i] = z;
        insert_topic(d, w, z, c);

        int prev = i == 0 ? B : cs[i - 1];
        int next = i + 1 == ids.size() ? B : cs[i + 1];
        remove_class(w, z, c, prev, next);
        c = static_cast<int>(rng_.categorical(class_weights(w, z, prev, next)));
        cs[i] = c;
        insert_class(w, z, c, prev, next);
      }
    }
  }
  ++sweeps_;
}

long long HmmLdaState::doc_topic(std::size_t d, int z) const {
  if (d >= doc_count_ || z < 0 || z >= config_.topics)
    throw std::out_of_range("hmmlda: doc_topic index");
  return n_dz_[d * static_cast<std::size_t>(config_.topics) + z];
}

long long HmmLdaState::topic_word(int z, int w) const {
  if (z < 0 || z >= config_.topics || w < 0 || w >= vocab_size_)
    throw std::out_of_range("hmmlda: topic_word index");
  return n_zw_[static_cast<std::size_t>(z) * vocab_size_ + w];
}

long long HmmLdaState::topic_total(int z) const {
  if (z < 0 || z >= config_.topics)
    throw std::out_of_range("hmmlda: topic_total index");
  return n_z_[static_cast<std::size_t>(z)];
}

long long HmmLdaState::class_word(int c, int w) const {
  if (c < 1 || c >= config_.classes || w < 0 || w >= vocab_size_)
    throw std::out_of_range("hmmlda: class_word index");
  return n_cw_[static_cast<std::size_t>(c) * vocab_size_ + w];
}

long long HmmLdaState::class_total(int c) const {
  if (c < 1 || c >= config_.classes)
    throw std::out_of_range("hmmlda: class_total index");
  return n_c_[static_cast<std::size_t>(c)];
}

long long HmmLdaState::transition(int from, int to) const {
  const int cp = config_.classes + 1;
  if (from < 0 || from >= cp || to < 0 || to >= cp)
    throw std::out_of_range("hmmlda: transition index");
  return n_cc_[static_cast<std::size_t>(from) * cp + to];
}

long long HmmLdaState::transition_row_total(int from) const {
  if (from < 0 || from > config_.classes)
    throw std::out_of_range("hmmlda: transition row index");
  return n_cc_row_[static_cast<std::size_t>(from)];
}

int HmmLdaState::z_at(std::size_t d, std::size_t u, std::size_t i) const {
  return z_.at(d).at(u).at(i);
}

int HmmLdaState::c_at(std::size_t d, std::size_t u, std::size_t i) const {
  return c_.at(d).at(u).at(i);
}

std::vector<double> HmmLdaState::topic_conditional(std::size_t d,
                                                   std::size_t u,
                                                   std::size_t i) {
  const int w = docs_.at(d).at(u).at(i);
  const int z = z_[d][u][i], c = c_[d][u][i];
  remove_topic(d, w, z, c);
  auto out = topic_weights(d, w, c);
  insert_topic(d, w, z, c);
  return out;
}

std::vector<double> HmmLdaState::class_conditional(std::size_t d,
                                                   std::size_t u,
                                                   std::size_t i) {
  const auto& ids = docs_.at(d).at(u);
  const int w = ids.at(i);
  const int z = z_[d][u][i], c = c_[d][u][i];
  const int B = boundary_class();
  int prev = i == 0 ? B : c_[d][u][i - 1];
  int next = i + 1 == ids.size() ? B : c_[d][u][i + 1];
  remove_class(w, z, c, prev, next);
  auto out = class_weights(w, z, prev, next);
  insert_class(w, z, c, prev, next);
  return out;
}

void HmmLdaState::permute_topics(const std::vector<int>& perm) {
  if (!has_assignments())
    throw std::logic_error("hmmlda: no assignments to permute");
  const int K = config_.topics;
  if (perm.size() != static_cast<std::size_t>(K))
    throw std::invalid_argument("hmmlda: permutation has wrong size");
  std::vector<bool> seen(static_cast<std::size_t>(K), false);
  for (int p : perm) {
    if (p < 0 || p >= K || seen[static_cast<std::size_t>(p)])
      throw std::invalid_argument("hmmlda: not a permutation");
    seen[static_cast<std::size_t>(p)] = true;
  }
  for (auto& doc : z_)
    for (auto& utt : doc)
      for (int& z : utt) z = perm[static_cast<std::size_t>(z)];
  n_dz_.assign(doc_count_ * static_cast<std::size_t>(K), 0);
  n_zw_.assign(static_cast<std::size_t>(K) * vocab_size_, 0);
  n_z_.assign(static_cast<std::size_t>(K), 0);
  for (std::size_t d = 0; d < docs_.size(); ++d)
    for (std::size_t u = 0; u < docs_[d].size(); ++u)
      for (std::size_t i = 0; i < docs_[d][u].size(); ++i)
        insert_topic(d, docs_[d][u][i], z_[d][u][i], c_[d][u][i]);
}

void HmmLdaState::check_consistency() const {
  if (!has_assignments())
    throw std::logic_error("hmmlda: no assignments to check");
  const int K = config_.topics, C = config_.classes, V = vocab_size_;
  const int B = C, cp = C + 1;
  std::vector<long long> dz(doc_count_ * static_cast<std::size_t>(K), 0);
  std::vector<long long> zw(static_cast<std::size_t>(K) * V, 0);
  std::vector<long long> zt(static_cast<std::size_t>(K), 0);
  std::vector<long long> cw(static_cast<std::size_t>(C) * V, 0);
  std::vector<long long> ct(static_cast<std::size_t>(C), 0);
  std::vector<long long> cc(static_cast<std::size_t>(cp) * cp, 0);
  std::vector<long long> ccr(static_cast<std::size_t>(cp), 0);
  std::size_t tokens = 0;
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    for (std::size_t u = 0; u < docs_[d].size(); ++u) {
      const auto& ids = docs_[d][u];
      tokens += ids.size();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        int w = ids[i], z = z_[d][u][i], c = c_[d][u][i];
        ++dz[d * static_cast<std::size_t>(K) + z];
        if (c == 0) {
          ++zw[static_cast<std::size_t>(z) * V + w];
          ++zt[static_cast<std::size_t>(z)];
        } else {
          ++cw[static_cast<std::size_t>(c) * V + w];
          ++ct[static_cast<std::size_t>(c)];
        }
        int prev = i == 0 ? B : c_[d][u][i - 1];
        ++cc[static_cast<std::size_t>(prev) * cp + c];
        ++ccr[static_cast<std::size_t>(prev)];
      }
      int last = c_[d][u].back();
      ++cc[static_cast<std::size_t>(last) * cp + B];
      ++ccr[static_cast<std::size_t>(last)];
    }
  }
  auto require = [](bool ok, const char* what) {
    if (!ok)
      throw std::runtime_error(std::string("hmmlda: table mismatch: ") + what);
  };
  require(tokens == token_count_, "token count");
  require(dz == n_dz_, "doc-topic");
  require(zw == n_zw_, "topic-word");
  require(zt == n_z_, "topic totals");
  require(cw == n_cw_, "class-word");
  require(ct == n_c_, "class totals");
  require(cc == n_cc_, "transitions");
  require(ccr == n_cc_row_, "transition row totals");
}

void HmmLdaState::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write hmmlda file: " + path);
  const int K = config_.topics, C = config_.classes, V = vocab_size_;
  out << "HMMLDA v1\n";
  out << "K " << K << '\n';
  out << "C " << C << '\n';
  out << "V " << V << '\n';
  out << "D " << doc_count_ << '\n';
  out << "alpha_t " << fmt17(config_.alpha_t) << '\n';
  out << "beta_t " << fmt17(config_.beta_t) << '\n';
  out << "delta_c " << fmt17(config_.delta_c) << '\n';
  out << "gamma_c " << fmt17(config_.gamma_c) << '\n';
  auto dump = [&out](const char* name, const std::vector<long long>& table,
                     std::size_t rows, std::size_t cols) {
    std::size_t nonzero = 0;
    for (long long v : table) nonzero += v != 0;
    out << "table " << name << ' ' << nonzero << '\n';
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        if (table[r * cols + c] != 0)
          out << r << '\t' << c << '\t' << table[r * cols + c] << '\n';
  };
  dump("n_dz", n_dz_, doc_count_, static_cast<std::size_t>(K));
  dump("n_zw", n_zw_, static_cast<std::size_t>(K), static_cast<std::size_t>(V));
  dump("n_cw", n_cw_, static_cast<std::size_t>(C), static_cast<std::size_t>(V));
  dump("n_cc", n_cc_, static_cast<std::size_t>(C + 1),
       static_cast<std::size_t>(C + 1));
  if (!out) throw std::runtime_error("write failed: " + path);
}

HmmLdaState HmmLdaState::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open hmmlda file: " + path);
  std::string line;
  auto next_line = [&]() -> std::string {
    if (!std::getline(in, line))
      throw std::runtime_error(path + ": truncated file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  if (next_line() != "HMMLDA v1")
    throw std::runtime_error(path + ": bad header, expected 'HMMLDA v1'");

  HmmLdaState st;
  long long K = 0, C = 0, V = 0, D = 0;
  auto read_int = [&](const char* key, long long& dst) {
    std::istringstream ss(next_line());
    std::string k;
    ss >> k >> dst;
    if (k != key || ss.fail() || dst < 0)
      throw std::runtime_error(path + ": bad " + key + " line");
  };
  read_int("K", K);
  read_int("C", C);
  read_int("V", V);
  read_int("D", D);
  auto read_prior = [&](const char* key, double& dst) {
    std::istringstream ss(next_line());
    std::string k, val;
    ss >> k >> val;
    if (k != key || ss.fail())
      throw std::runtime_error(path + ": bad " + key + " line");
    dst = parse_double_tok(val, path);
    if (!(dst > 0.0))
      throw std::runtime_error(path + ": " + key + " must be positive");
  };
  read_prior("alpha_t", st.config_.alpha_t);
  read_prior("beta_t", st.config_.beta_t);
  read_prior("delta_c", st.config_.delta_c);
  read_prior("gamma_c", st.config_.gamma_c);
  if (K < 1 || C < 1 || V < 1 || D < 1)
    throw std::runtime_error(path + ": bad dimensions");
  st.config_.topics = static_cast<int>(K);
  st.config_.classes = static_cast<int>(C);
  st.vocab_size_ = static_cast<int>(V);
  st.doc_count_ = static_cast<std::size_t>(D);

  st.n_dz_.assign(st.doc_count_ * static_cast<std::size_t>(K), 0);
  st.n_zw_.assign(static_cast<std::size_t>(K * V), 0);
  st.n_z_.assign(static_cast<std::size_t>(K), 0);
  st.n_cw_.assign(static_cast<std::size_t>(C * V), 0);
  st.n_c_.assign(static_cast<std::size_t>(C), 0);
  st.n_cc_.assign(static_cast<std::size_t>((C + 1) * (C + 1)), 0);
  st.n_cc_row_.assign(static_cast<std::size_t>(C + 1), 0);

  auto read_table = [&](const char* name, std::vector<long long>& table,
                        long long rows, long long cols) {
    std::istringstream ss(next_line());
    std::string k, n;
    std::size_t entries = 0;
    ss >> k >> n >> entries;
    if (k != "table" || n != name || ss.fail())
      throw std::runtime_error(path + ": bad table header for " + name);
    for (std::size_t e = 0; e < entries; ++e) {
      std::istringstream es(next_line());
      long long r = 0, c = 0, count = 0;
      es >> r >> c >> count;
      if (es.fail() || r < 0 || r >= rows || c < 0 || c >= cols || count < 1)
        throw std::runtime_error(path + ": bad entry in table " + name);
      table[static_cast<std::size_t>(r * cols + c)] = count;
    }
  };
  read_table("n_dz", st.n_dz_, D, K);
  read_table("n_zw", st.n_zw_, K, V);
  read_table("n_cw", st.n_cw_, C, V);
  read_table("n_cc", st.n_cc_, C + 1, C + 1);

  for (long long z = 0; z < K; ++z) {
    long long t = 0;
    for (long long w = 0; w < V; ++w)
      t += st.n_zw_[static_cast<std::size_t>(z * V + w)];
    st.n_z_[static_cast<std::size_t>(z)] = t;
  }
  for (long long c = 0; c < C; ++c) {
    long long t = 0;
    for (long long w = 0; w < V; ++w)
      t += st.n_cw_[static_cast<std::size_t>(c * V + w)];
    st.n_c_[static_cast<std::size_t>(c)] = t;
  }
  for (long long a = 0; a <= C; ++a) {
    long long t = 0;
    for (long long b = 0; b <= C; ++b)
      t += st.n_cc_[static_cast<std::size_t>(a * (C + 1) + b)];
    st.n_cc_row_[static_cast<std::size_t>(a)] = t;
  }
  for (long long v : st.n_dz_) st.token_count_ += static_cast<std::size_t>(v);
  return st;
}

std::pair<HmmLdaState, WordTopicStats> train_hmmlda(
    const HmmLdaConfig& config, const std::vector<Document>& documents,
    const Vocabulary& vocab) {
  config.validate();
  HmmLdaState state = HmmLdaState::init(config, documents, vocab);
  const int S = config.sample_count;
  std::unordered_map<std::string, WordTopicStats::Entry> sum;
  int collected = 0;
  for (int s = 1; s <= config.burn_in; ++s) {
    state.sweep();
    if (s > config.burn_in - S) {
      WordTopicStats ws = word_stats(state, vocab);
      ++collected;
      for (const auto& [word, e] : ws.entries()) {
        auto& acc = sum[word];
        if (acc.topic_dist.empty())
          acc.topic_dist.assign(e.topic_dist.size(), 0.0);
        acc.content_prob += e.content_prob;
        for (std::size_t t = 0; t < e.topic_dist.size(); ++t)
          acc.topic_dist[t] += e.topic_dist[t];
      }
    }
  }
  for (auto& [word, e] : sum) {
    e.content_prob /= collected;
    for (double& p : e.topic_dist) p /= collected;
  }
  return {std::move(state), WordTopicStats(config.topics, std::move(sum))};
}

WordTopicStats word_stats(const HmmLdaState& state, const Vocabulary& vocab,
                          double smoothing) {
  if (!(smoothing > 0.0))
    throw std::invalid_argument("word_stats: smoothing must be positive");
  if (static_cast<int>(vocab.size()) != state.vocab_size())
    throw std::invalid_argument("word_stats: vocabulary size mismatch");
  const int K = state.topics(), C = state.classes(), V = state.vocab_size();
  std::unordered_map<std::string, WordTopicStats::Entry> entries;
  for (int w = 0; w < V; ++w) {
    long long n_c0 = 0;
    for (int z = 0; z < K; ++z) n_c0 += state.topic_word(z, w);
    long long n_rest = 0;
    for (int c = 1; c < C; ++c) n_rest += state.class_word(c, w);
    long long n = n_c0 + n_rest;
    if (n == 0) continue;
    WordTopicStats::Entry e;
    e.content_prob = static_cast<double>(n_c0) / static_cast<double>(n);
    e.topic_dist.resize(static_cast<std::size_t>(K));
    double denom = static_cast<double>(n_c0) + K * smoothing;
    for (int z = 0; z < K; ++z)
      e.topic_dist[static_cast<std::size_t>(z)] =
          (static_cast<double>(state.topic_word(z, w)) + smoothing) / denom;
    entries.emplace(vocab.token(w), std::move(e));
  }
  return WordTopicStats(K, std::move(entries));
}

WordTopicStats word_stats(const HmmLdaState& state, const Vocabulary& vocab) {
  return word_stats(state, vocab, state.config().beta_t);
}

std::pair<std::vector<double>, double> sentence_topic_dist(
    const WordTopicStats& stats, const TokenSeq& sentence) {
  const int K = stats.topics();
  if (K < 1) throw std::logic_error("sentence_topic_dist: empty stats");
  std::vector<double> acc(static_cast<std::size_t>(K), 0.0);
  double z = 0.0;
  for (const auto& tok : sentence) {
    double cp = stats.content_prob(tok);
    if (cp == 0.0) continue;
    z += cp;
    auto td = stats.topic_given_word(tok);
    for (int t = 0; t < K; ++t)
      acc[static_cast<std::size_t>(t)] += cp * td[static_cast<std::size_t>(t)];
  }
  if (z < 1e-9)
    return {std::vector<double>(static_cast<std::size_t>(K),
                                1.0 / static_cast<double>(K)),
            0.0};
  for (double& p : acc) p /= z;
  return {std::move(acc), z};
}

std::vector<std::string> top_topic_words(const HmmLdaState& state,
                                         const Vocabulary& vocab, int topic,
                                         int n,
                                         const std::unordered_set<std::string>& stop_list) {
  if (topic < 0 || topic >= state.topics())
    throw std::out_of_range("top_topic_words: topic out of range");
  if (static_cast<int>(vocab.size()) != state.vocab_size())
    throw std::invalid_argument("top_topic_words: vocabulary size mismatch");
  if (n <= 0) return {};
  std::vector<std::pair<long long, int>> ranked;  // (-count used via comparator)
  for (int w = 0; w < state.vocab_size(); ++w) {
    if (stop_list.count(vocab.token(w))) continue;
    ranked.emplace_back(state.topic_word(topic, w), w);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (const auto& [count, w] : ranked) {
    if (static_cast<int>(out.size()) == n) break;
    out.push_back(vocab.token(w));
  }
  return out;
}

}  // namespace dcgen
