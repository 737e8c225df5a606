#ifndef DCGEN_CORPUS_HPP
#define DCGEN_CORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace dcgen {

using TokenSeq = std::vector<std::string>;

struct DialoguePair {
  TokenSeq source;
  TokenSeq target;
};

// Lowercases and splits an utterance into word/punctuation tokens.
// Clitics are split at the apostrophe ("don't" -> "don" "'t"); every other
// non-alphanumeric character becomes its own token.
TokenSeq tokenize(std::string_view text);

std::string join_tokens(const TokenSeq& tokens);

// Token inventory with dense ids, reserved symbols and unigram statistics.
// Immutable once built; safe to share across threads.
class Vocabulary {
 public:
  static constexpr int kUnkId = 0;
  static constexpr int kBosId = 1;
  static constexpr int kEosId = 2;
  static constexpr int kNullId = 3;
  static constexpr const char* kUnkToken = "<unk>";
  static constexpr const char* kBosToken = "<s>";
  static constexpr const char* kEosToken = "</s>";
  static constexpr const char* kNullToken = "<null>";

  // Counts every source and target token; tokens seen fewer than min_count
  // times are folded into <unk>.
  static Vocabulary build(const std::vector<DialoguePair>& pairs, int min_count);

  int size() const { return static_cast<int>(tokens_.size()); }
  long long total_tokens() const { return total_; }

  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  // Id of the token, <unk> id if absent.
  int id(const std::string& token) const;
  const std::string& token(int id) const { return tokens_.at(id); }
  long long count(int id) const { return counts_.at(id); }

  double unigram(int id) const;
  double unigram(const std::string& token) const { return unigram(id(token)); }

  // Unk-mapped ids for a token sequence.
  std::vector<int> ids(const TokenSeq& tokens) const;
  TokenSeq surface(const std::vector<int>& ids) const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  Vocabulary() = default;
  std::vector<std::string> tokens_;
  std::vector<long long> counts_;
  std::unordered_map<std::string, int> index_;
  long long total_ = 0;
};

struct Bucket {
  std::string name;
  int min_source_len = 0;
  int max_source_len = 0;
};

struct BucketSpec {
  std::vector<Bucket> ranges;

  // b1: 3-6 words, b2: 7-15, b3: 16-25.
  static BucketSpec default_spec();
  // Throws unless ranges are sorted ascending and non-overlapping.
  void validate() const;
  // Index of the bucket containing a source of the given length, or nullopt.
  std::optional<int> bucket_of(int source_len) const;
};

struct BucketSample {
  std::vector<std::string> names;
  std::vector<std::vector<DialoguePair>> buckets;
};

// Drops pairs whose source length falls outside every range, then samples at
// most per_bucket pairs uniformly per bucket. Deterministic under seed.
BucketSample bucket_split(const std::vector<DialoguePair>& pairs, const BucketSpec& spec,
                          int per_bucket, std::uint64_t seed);

// One pair per line, "source<TAB>target". With raw=true both sides run
// through tokenize(); otherwise they are split on spaces.
std::vector<DialoguePair> load_pairs(const std::filesystem::path& path, bool raw);

// Bundled stop-word list: common English function words, clitic pieces and
// punctuation marks.
const std::vector<std::string>& default_stopwords();
std::vector<std::string> load_stopwords(const std::filesystem::path& path);

inline std::unordered_set<std::string> to_set(const std::vector<std::string>& words) {
  return {words.begin(), words.end()};
}

}  // namespace dcgen

#endif
