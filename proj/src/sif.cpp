#include "dcgen/sif.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dcgen/kernels.hpp"
#include "dcgen/rng.hpp"

namespace dcgen {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

WordVectors WordVectors::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open word-vector file: " + path);
  WordVectors wv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> vec;
    double x;
    while (ss >> x) vec.push_back(x);
    if (!ss.eof())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": malformed vector entry");
    if (vec.empty())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": no vector components");
    for (double c : vec)
      if (!std::isfinite(c))
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": non-finite component");
    if (wv.dim_ == 0) wv.dim_ = vec.size();
    if (vec.size() != wv.dim_)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": inconsistent dimension");
    if (!wv.table_.emplace(word, std::move(vec)).second)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": duplicate word " + word);
  }
  return wv;
}

const std::vector<double>* WordVectors::find(const std::string& word) const {
  auto it = table_.find(word);
  return it == table_.end() ? nullptr : &it->second;
}

void WordVectors::add(const std::string& word, std::vector<double> vec) {
  if (word.empty() || word.find_first_of(" \t\r\n") != std::string::npos)
    throw std::invalid_argument("word vectors: invalid word");
  for (double c : vec)
    if (!std::isfinite(c))
      throw std::invalid_argument("word vectors: non-finite component");
  if (dim_ == 0) dim_ = vec.size();
  if (vec.size() != dim_)
    throw std::invalid_argument("word vectors: inconsistent dimension");
  table_[word] = std::move(vec);
}

void WordVectors::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write word-vector file: " + path);
  std::vector<const std::string*> words;
  words.reserve(table_.size());
  for (const auto& [word, vec] : table_) words.push_back(&word);
  std::sort(words.begin(), words.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });
  for (const auto* word : words) {
    out << *word;
    for (double c : table_.at(*word)) out << ' ' << fmt17(c);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

double SifModel::weight(const std::string& word) const {
  auto it = unigram.find(word);
  double p = it == unigram.end() ? 0.0 : it->second;
  return a / (a + p);
}

std::vector<double> SifModel::embed_raw(const TokenSeq& sentence) const {
  std::vector<double> v(dim(), 0.0);
  int n_inv = 0;
  for (const auto& tok : sentence) {
    const auto* vec = vectors.find(tok);
    if (!vec) continue;
    ++n_inv;
    double w = weight(tok);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += w * (*vec)[j];
  }
  if (n_inv > 0)
    for (double& x : v) x /= n_inv;
  return v;
}

std::vector<double> SifModel::embed(const TokenSeq& sentence) const {
  std::vector<double> v = embed_raw(sentence);
  if (u.size() != v.size())
    throw std::runtime_error("sif: model has no fitted direction of size dim");
  double d = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) d += u[j] * v[j];
  for (std::size_t j = 0; j < v.size(); ++j) v[j] -= d * u[j];
  return v;
}

void SifModel::save(const std::string& path,
                    const std::string& vector_file_ref) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write sif file: " + path);
  out << "SIF v1\n";
  out << "a " << fmt17(a) << '\n';
  out << "d " << dim() << '\n';
  out << "vectors " << vector_file_ref << '\n';
  out << "u";
  for (double c : u) out << ' ' << fmt17(c);
  out << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

SifModel SifModel::load(const std::string& path,
                        std::unordered_map<std::string, double> unigram) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sif file: " + path);
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != "SIF v1")
    throw std::runtime_error(path + ": bad header, expected 'SIF v1'");
  SifModel model;
  model.unigram = std::move(unigram);
  std::string vector_ref;
  std::size_t d = 0;
  bool have_a = false, have_d = false, have_vec = false, have_u = false;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "a") {
      ss >> model.a;
      have_a = true;
    } else if (key == "d") {
      ss >> d;
      have_d = true;
    } else if (key == "vectors") {
      ss >> vector_ref;
      have_vec = true;
    } else if (key == "u") {
      double x;
      while (ss >> x) model.u.push_back(x);
      have_u = true;
    } else {
      throw std::runtime_error(path + ": unknown key " + key);
    }
    if (ss.bad()) throw std::runtime_error(path + ": parse error");
  }
  if (!(have_a && have_d && have_vec && have_u))
    throw std::runtime_error(path + ": missing field");
  if (!(model.a > 0.0))
    throw std::runtime_error(path + ": a must be positive");
  if (model.u.size() != d)
    throw std::runtime_error(path + ": u has wrong dimension");
  double norm = l2_norm(model.u);
  if (std::abs(norm - 1.0) > 1e-9)
    throw std::runtime_error(path + ": u is not a unit vector");
  std::filesystem::path vec_path(vector_ref);
  if (vec_path.is_relative())
    vec_path = std::filesystem::path(path).parent_path() / vec_path;
  model.vectors = WordVectors::load(vec_path.string());
  if (model.vectors.dim() != d)
    throw std::runtime_error(path + ": vector file dimension mismatch");
  return model;
}

SifModel fit_sif(WordVectors vectors,
                 std::unordered_map<std::string, double> unigram,
                 const std::vector<TokenSeq>& sentences, double a, int threads) {
  if (sentences.size() < 2)
    throw std::invalid_argument("fit_sif: need at least two sentences");
  if (!(a > 0.0)) throw std::invalid_argument("fit_sif: a must be positive");
  SifModel model;
  model.vectors = std::move(vectors);
  model.unigram = std::move(unigram);
  model.a = a;
  const std::size_t d = model.dim();
  if (d == 0) throw std::invalid_argument("fit_sif: empty vector table");

  const std::size_t n = sentences.size();
  std::vector<double> x(n * d, 0.0);
  kernels::parallel_for(n, threads, [&](std::size_t i) {
    auto row = model.embed_raw(sentences[i]);
    std::copy(row.begin(), row.end(), x.begin() + i * d);
  });
  bool any_nonzero = false;
  for (double c : x)
    if (c != 0.0) {
      any_nonzero = true;
      break;
    }
  if (!any_nonzero)
    throw std::invalid_argument("fit_sif: all sentence embeddings are zero");

  Rng rng(0x9e3779b97f4a7c15ULL);
  std::vector<double> v(d);
  auto randomize = [&] {
    double norm = 0.0;
    do {
      for (double& c : v) c = rng.gaussian();
      norm = l2_norm(v);
    } while (norm == 0.0);
    for (double& c : v) c /= norm;
  };
  randomize();
  for (int iter = 0; iter < 1000; ++iter) {
    auto y = kernels::gram_matvec(x, n, d, v, threads);
    double norm = l2_norm(y);
    if (norm < 1e-300) {
      // start vector fell into the null space; try another direction
      randomize();
      continue;
    }
    for (double& c : y) c /= norm;
    double delta = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double t = y[j] - v[j];
      delta += t * t;
    }
    v = std::move(y);
    if (std::sqrt(delta) < 1e-8) break;
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (std::abs(v[j]) > 1e-12) {
      if (v[j] < 0.0)
        for (double& c : v) c = -c;
      break;
    }
  }
  model.u = std::move(v);
  return model;
}

std::vector<std::vector<double>> embed_batch(const SifModel& model,
                                             const std::vector<TokenSeq>& sentences,
                                             int threads) {
  std::vector<std::vector<double>> out(sentences.size());
  kernels::parallel_for(sentences.size(), threads,
                        [&](std::size_t i) { out[i] = model.embed(sentences[i]); });
  return out;
}

double similarity(std::span<const double> v1, std::span<const double> v2) {
  if (v1.size() != v2.size())
    throw std::invalid_argument("similarity: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < v1.size(); ++i) s += v1[i] * v2[i];
  return s;
}

}  // namespace dcgen
