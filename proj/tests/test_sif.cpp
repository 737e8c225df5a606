#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "dcgen/rng.hpp"
#include "dcgen/sif.hpp"
#include "support/oracles.hpp"

using namespace dcgen;
namespace fs = std::filesystem;

namespace {

SifModel toy_model() {
  SifModel m;
  m.vectors.add("a", {1.0, 0.0});
  m.vectors.add("b", {0.0, 1.0});
  m.unigram = {{"a", 0.1}, {"b", 0.01}};
  m.a = 1e-3;
  m.u = {1.0, 0.0};
  return m;
}

std::vector<TokenSeq> random_sentences(int count, const std::vector<std::string>& words,
                                       Rng& rng) {
  std::vector<TokenSeq> out;
  for (int i = 0; i < count; ++i) {
    TokenSeq s;
    int len = 2 + rng.uniform_int(6);
    for (int j = 0; j < len; ++j)
      s.push_back(words[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(words.size())))]);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("word vectors store, save and load") {
  WordVectors wv;
  CHECK(wv.dim() == 0);
  CHECK(wv.find("a") == nullptr);
  wv.add("a", {1.0, 2.0});
  CHECK(wv.dim() == 2);
  REQUIRE(wv.find("a") != nullptr);
  CHECK((*wv.find("a"))[1] == 2.0);
  CHECK_THROWS(wv.add("b", {1.0}));  // dimension fixed by first insert

  fs::path p = fs::temp_directory_path() / "wv_rt.txt";
  wv.add("b", {-0.25, 1e-17});
  wv.save(p.string());
  WordVectors back = WordVectors::load(p.string());
  CHECK(back.dim() == 2);
  CHECK(back.size() == 2);
  CHECK(*back.find("a") == *wv.find("a"));
  CHECK(*back.find("b") == *wv.find("b"));
  CHECK_THROWS(WordVectors::load("/nonexistent/wv.txt"));
}

TEST_CASE("rare-word weights follow a/(a+p)") {
  SifModel m = toy_model();
  CHECK(m.weight("a") == doctest::Approx(1.0 / 101.0).epsilon(1e-15));
  CHECK(m.weight("b") == doctest::Approx(1.0 / 11.0).epsilon(1e-15));
  CHECK(m.weight("zzz") == 1.0);  // unseen words count as maximally rare
}

TEST_CASE("embed_raw averages weighted vectors over covered tokens") {
  SifModel m = toy_model();
  std::vector<double> v = m.embed_raw({"a", "b"});
  CHECK(v[0] == doctest::Approx(1.0 / 202.0).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx(1.0 / 22.0).epsilon(1e-15));

  std::vector<double> skip = m.embed_raw({"a", "zzz"});
  CHECK(skip[0] == doctest::Approx(1.0 / 101.0).epsilon(1e-15));
  CHECK(skip[1] == 0.0);

  std::vector<double> none = m.embed_raw({"zzz"});
  CHECK(none == std::vector<double>{0.0, 0.0});
}

TEST_CASE("embed removes the common direction") {
  SifModel m = toy_model();
  std::vector<double> v = m.embed({"a", "b"});
  CHECK(v[0] == 0.0);
  CHECK(v[1] == doctest::Approx(1.0 / 22.0).epsilon(1e-15));

  m.u = {1.0};  // wrong length
  CHECK_THROWS(m.embed({"a"}));

  SifModel empty;  // dim 0, u empty: embedding is the zero-length vector
  CHECK(empty.embed({"a"}).empty());
}

TEST_CASE("fit_sif produces a unit direction orthogonal to embeddings") {
  Rng rng(17);
  std::vector<std::string> words;
  WordVectors wv;
  std::unordered_map<std::string, double> unigram;
  for (int i = 0; i < 40; ++i) {
    std::string w = "w" + std::to_string(i);
    words.push_back(w);
    std::vector<double> vec(16);
    for (double& x : vec) x = rng.gaussian();
    wv.add(w, vec);
    unigram[w] = 1.0 / 40.0;
  }
  std::vector<TokenSeq> sentences = random_sentences(60, words, rng);
  SifModel m = fit_sif(wv, unigram, sentences, 1e-3, 1);

  double norm = 0.0;
  for (double x : m.u) norm += x * x;
  CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-12);

  for (const auto& s : sentences) {
    std::vector<double> e = m.embed(s);
    double dot = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) dot += m.u[j] * e[j];
    CHECK(std::abs(dot) < 1e-8);

    // projecting again moves nothing
    double d2 = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) d2 += m.u[j] * e[j];
    for (std::size_t j = 0; j < e.size(); ++j) {
      double again = e[j] - d2 * m.u[j];
      CHECK(std::abs(again - e[j]) < 1e-8);
    }
  }

  // sign convention: first nonzero coordinate is positive
  for (double x : m.u) {
    if (x != 0.0) {
      CHECK(x > 0.0);
      break;
    }
  }
}

TEST_CASE("fit_sif recovers the direction of rank-1 data") {
  WordVectors wv;
  double d0 = 3.0 / 5.0, d1 = -4.0 / 5.0;
  wv.add("p", {2.0 * d0, 2.0 * d1});
  wv.add("q", {-1.0 * d0, -1.0 * d1});
  wv.add("r", {0.5 * d0, 0.5 * d1});
  std::vector<TokenSeq> sentences = {{"p"}, {"q"}, {"r"}, {"p", "q"}, {"p", "r"}};
  SifModel m = fit_sif(wv, {}, sentences, 1e-3, 1);
  CHECK(std::abs(std::abs(m.u[0] * d0 + m.u[1] * d1) - 1.0) < 1e-8);
  CHECK(m.u[0] > 0.0);
  for (const auto& s : sentences) {
    for (double x : m.embed(s)) CHECK(std::abs(x) < 1e-8);
  }
}

TEST_CASE("power iteration agrees with the closed-form 2x2 eigenvector") {
  Rng rng(29);
  std::vector<std::string> words;
  WordVectors wv;
  for (int i = 0; i < 8; ++i) {
    std::string w = "w" + std::to_string(i);
    words.push_back(w);
    wv.add(w, {rng.gaussian(), rng.gaussian()});
  }
  std::vector<TokenSeq> sentences = random_sentences(25, words, rng);
  SifModel probe;
  probe.vectors = wv;
  double a = 0.0, b = 0.0, c = 0.0;
  for (const auto& s : sentences) {
    std::vector<double> r = probe.embed_raw(s);
    a += r[0] * r[0];
    b += r[0] * r[1];
    c += r[1] * r[1];
  }
  auto expect = oracle::eig2x2_dominant(a, b, c);
  SifModel m = fit_sif(wv, {}, sentences, 1e-3, 1);
  CHECK(m.u[0] == doctest::Approx(expect[0]).epsilon(1e-6));
  CHECK(m.u[1] == doctest::Approx(expect[1]).epsilon(1e-6));
}

TEST_CASE("similarity is a dot product") {
  std::vector<double> x = {1.0, 2.0}, y = {3.0, 4.0};
  CHECK(similarity(x, y) == 11.0);
  CHECK_THROWS(similarity(x, std::vector<double>{1.0}));
}

TEST_CASE("sif model save and load round trip") {
  Rng rng(5);
  WordVectors wv;
  std::vector<std::string> words;
  for (int i = 0; i < 10; ++i) {
    std::string w = "w" + std::to_string(i);
    words.push_back(w);
    wv.add(w, {rng.gaussian(), rng.gaussian(), rng.gaussian()});
  }
  std::unordered_map<std::string, double> unigram = {{"w0", 0.5}, {"w1", 0.5}};
  std::vector<TokenSeq> sentences = random_sentences(12, words, rng);
  SifModel m = fit_sif(wv, unigram, sentences, 2e-3, 1);

  fs::path dir = fs::temp_directory_path();
  m.vectors.save((dir / "sif_rt_vectors.txt").string());
  m.save((dir / "sif_rt_model.txt").string(), "sif_rt_vectors.txt");
  SifModel back = SifModel::load((dir / "sif_rt_model.txt").string(), unigram);
  CHECK(back.a == m.a);
  CHECK(back.u == m.u);
  CHECK(back.dim() == m.dim());
  CHECK(*back.vectors.find("w3") == *m.vectors.find("w3"));
  CHECK(back.embed(sentences[0]) == m.embed(sentences[0]));
}

TEST_CASE("embed_batch matches embed and any thread count") {
  Rng rng(31);
  WordVectors wv;
  std::vector<std::string> words;
  for (int i = 0; i < 20; ++i) {
    std::string w = "w" + std::to_string(i);
    words.push_back(w);
    std::vector<double> vec(8);
    for (double& x : vec) x = rng.gaussian();
    wv.add(w, vec);
  }
  std::vector<TokenSeq> sentences = random_sentences(40, words, rng);
  SifModel m = fit_sif(wv, {}, sentences, 1e-3, 0);
  auto one = embed_batch(m, sentences, 1);
  auto many = embed_batch(m, sentences, 8);
  REQUIRE(one.size() == sentences.size());
  CHECK(one == many);
  for (std::size_t i = 0; i < sentences.size(); ++i)
    CHECK(one[i] == m.embed(sentences[i]));
}

TEST_CASE("fit_sif rejects degenerate input") {
  WordVectors wv;
  wv.add("a", {1.0, 0.0});
  CHECK_THROWS(fit_sif(wv, {}, {{"a"}}, 1e-3, 1));  // one sentence
  CHECK_THROWS(fit_sif(wv, {}, {{"zz"}, {"zz"}}, 1e-3, 1));  // all zero rows
}
