#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcgen/corpus.hpp"

namespace dcgen {

// Word embedding table backed by the usual text format:
// one `word f1 f2 ... fd` per line.
class WordVectors {
 public:
  static WordVectors load(const std::string& path);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return table_.size(); }

  // nullptr when the word has no vector.
  const std::vector<double>* find(const std::string& word) const;

  // Inserts or replaces. The first insertion fixes the dimension.
  void add(const std::string& word, std::vector<double> vec);

  void save(const std::string& path) const;

  const std::unordered_map<std::string, std::vector<double>>& table() const {
    return table_;
  }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> table_;
};

// Smoothed-inverse-frequency sentence encoder: rare-word-weighted average of
// word vectors with the corpus common direction u projected out.
struct SifModel {
  WordVectors vectors;
  std::unordered_map<std::string, double> unigram;  // word -> P(w)
  double a = 1e-3;
  std::vector<double> u;  // unit vector, fixed at fit time

  std::size_t dim() const { return vectors.dim(); }

  // a / (a + P(w)); words missing from the unigram table get P(w) = 0.
  double weight(const std::string& word) const;

  // Weighted average over tokens that have vectors, divided by the number of
  // such tokens. Tokens without vectors are skipped; if none remain the
  // result is the zero vector. No projection.
  std::vector<double> embed_raw(const TokenSeq& sentence) const;

  // embed_raw with the u component removed: v - u (u . v).
  std::vector<double> embed(const TokenSeq& sentence) const;

  // Writes a, d, the vector-file reference and u. Word vectors themselves
  // stay in their own file.
  void save(const std::string& path, const std::string& vector_file_ref) const;

  // Loads the model header and the word vectors it references (relative
  // references are resolved against the model file's directory). The unigram
  // table is not part of the file and must be supplied by the caller.
  static SifModel load(const std::string& path,
                       std::unordered_map<std::string, double> unigram);
};

// Fits u on the given sentence sample: raw embeddings form the rows of a
// matrix whose dominant right singular direction is found by power iteration
// (tolerance 1e-8, at most 1000 rounds), sign-fixed so the first nonzero
// coordinate is positive. Throws if every raw embedding is zero or fewer
// than two sentences are given. threads < 1 means use all cores; the result
// does not depend on the thread count.
SifModel fit_sif(WordVectors vectors,
                 std::unordered_map<std::string, double> unigram,
                 const std::vector<TokenSeq>& sentences, double a = 1e-3,
                 int threads = 0);

// Embeds many sentences; rows are independent so any thread count gives
// bit-identical output.
std::vector<std::vector<double>> embed_batch(const SifModel& model,
                                             const std::vector<TokenSeq>& sentences,
                                             int threads);

// Plain dot product; the similarity used for the semantic constraint.
double similarity(std::span<const double> v1, std::span<const double> v2);

}  // namespace dcgen
