#include "dcgen/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "dcgen/rng.hpp"

namespace dcgen {

namespace {

bool is_word_char(unsigned char c) {
  // Bytes >= 0x80 are parts of multi-byte UTF-8 sequences; keep them inside words.
  return std::isalnum(c) || c >= 0x80;
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      flush();
    } else if (is_word_char(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '\'' && i + 1 < text.size() &&
               is_word_char(static_cast<unsigned char>(text[i + 1]))) {
      // Clitic: the apostrophe starts a new token ("here's" -> "here" "'s").
      flush();
      cur.push_back('\'');
    } else {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    }
  }
  flush();
  return out;
}

std::string join_tokens(const TokenSeq& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Vocabulary Vocabulary::build(const std::vector<DialoguePair>& pairs, int min_count) {
  if (min_count < 1) throw std::invalid_argument("build_vocab: min_count must be >= 1");
  if (pairs.empty()) throw std::invalid_argument("build_vocab: empty corpus");

  // Count in first-seen order so ids are reproducible.
  std::unordered_map<std::string, long long> counts;
  std::vector<std::string> order;
  long long total = 0;
  auto tally = [&](const TokenSeq& seq) {
    for (const auto& t : seq) {
      auto [it, inserted] = counts.emplace(t, 0);
      if (inserted) order.push_back(t);
      ++it->second;
      ++total;
    }
  };
  for (const auto& p : pairs) {
    tally(p.source);
    tally(p.target);
  }
  if (total == 0) throw std::invalid_argument("build_vocab: corpus has no tokens");

  Vocabulary v;
  v.tokens_ = {kUnkToken, kBosToken, kEosToken, kNullToken};
  v.counts_ = {0, 0, 0, 0};
  for (int i = 0; i < static_cast<int>(v.tokens_.size()); ++i) v.index_[v.tokens_[i]] = i;
  for (const auto& t : order) {
    long long c = counts[t];
    if (c >= min_count) {
      v.index_[t] = static_cast<int>(v.tokens_.size());
      v.tokens_.push_back(t);
      v.counts_.push_back(c);
    } else {
      v.counts_[kUnkId] += c;  // rare mass folds into <unk>
    }
  }
  v.total_ = total;
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkId : it->second;
}

double Vocabulary::unigram(int id) const {
  if (total_ == 0) return 0.0;
  return static_cast<double>(counts_.at(id)) / static_cast<double>(total_);
}

std::vector<int> Vocabulary::ids(const TokenSeq& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

TokenSeq Vocabulary::surface(const std::vector<int>& ids) const {
  TokenSeq out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "VOCAB v1 " << size() << ' ' << total_ << '\n';
  for (int i = 0; i < size(); ++i) f << tokens_[i] << '\t' << counts_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::string magic, version;
  int n = 0;
  long long total = 0;
  f >> magic >> version >> n >> total;
  if (magic != "VOCAB" || version != "v1" || n < 4)
    throw std::runtime_error("bad vocabulary file: " + path.string());
  f.ignore();
  Vocabulary v;
  v.total_ = total;
  std::string line;
  for (int i = 0; i < n; ++i) {
    if (!std::getline(f, line)) throw std::runtime_error("truncated vocabulary file: " + path.string());
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::runtime_error("bad vocabulary line: " + line);
    v.tokens_.push_back(line.substr(0, tab));
    v.counts_.push_back(std::stoll(line.substr(tab + 1)));
    v.index_[v.tokens_.back()] = i;
  }
  const char* reserved[] = {kUnkToken, kBosToken, kEosToken, kNullToken};
  for (int i = 0; i < 4; ++i)
    if (v.tokens_[i] != reserved[i])
      throw std::runtime_error("vocabulary file missing reserved tokens: " + path.string());
  return v;
}

BucketSpec BucketSpec::default_spec() {
  return BucketSpec{{{"b1", 3, 6}, {"b2", 7, 15}, {"b3", 16, 25}}};
}

void BucketSpec::validate() const {
  if (ranges.empty()) throw std::invalid_argument("bucket spec: no ranges");
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const auto& b = ranges[i];
    if (b.min_source_len < 1 || b.max_source_len < b.min_source_len)
      throw std::invalid_argument("bucket spec: bad range " + b.name);
    if (i > 0 && ranges[i - 1].max_source_len >= b.min_source_len)
      throw std::invalid_argument("bucket spec: ranges overlap or are unsorted");
  }
}

std::optional<int> BucketSpec::bucket_of(int source_len) const {
  for (std::size_t i = 0; i < ranges.size(); ++i)
    if (source_len >= ranges[i].min_source_len && source_len <= ranges[i].max_source_len)
      return static_cast<int>(i);
  return std::nullopt;
}

BucketSample bucket_split(const std::vector<DialoguePair>& pairs, const BucketSpec& spec,
                          int per_bucket, std::uint64_t seed) {
  spec.validate();
  if (per_bucket < 0) throw std::invalid_argument("bucket_split: per_bucket must be >= 0");

  std::vector<std::vector<int>> eligible(spec.ranges.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto b = spec.bucket_of(static_cast<int>(pairs[i].source.size()));
    if (b) eligible[*b].push_back(static_cast<int>(i));
  }

  BucketSample out;
  Rng rng(seed);
  for (std::size_t b = 0; b < spec.ranges.size(); ++b) {
    out.names.push_back(spec.ranges[b].name);
    out.buckets.emplace_back();
    if (eligible[b].empty()) {
      if (per_bucket > 0)
        std::cerr << "warning: bucket " << spec.ranges[b].name << " has no eligible pairs\n";
      continue;
    }
    auto picks = sample_indices(static_cast<int>(eligible[b].size()), per_bucket, rng);
    std::sort(picks.begin(), picks.end());
    for (int p : picks) out.buckets[b].push_back(pairs[eligible[b][p]]);
  }
  return out;
}

std::vector<DialoguePair> load_pairs(const std::filesystem::path& path, bool raw) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::vector<DialoguePair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected source<TAB>target");
    std::string src = line.substr(0, tab);
    std::string tgt = line.substr(tab + 1);
    DialoguePair p;
    if (raw) {
      p.source = tokenize(src);
      p.target = tokenize(tgt);
    } else {
      std::istringstream ss(src), st(tgt);
      std::string tok;
      while (ss >> tok) p.source.push_back(tok);
      while (st >> tok) p.target.push_back(tok);
    }
    if (p.source.empty() || p.target.empty())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": empty side after tokenization");
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(f, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace dcgen
