// Times the parallel kernels against their serial references on synthetic
// data and reports the largest observed divergence alongside the speedup.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcgen/kernels.hpp"
#include "dcgen/langmodel.hpp"
#include "dcgen/rng.hpp"
#include "dcgen/sif.hpp"

namespace {

using dcgen::Rng;

double time_ms(const std::function<void()>& fn, int repeats) {
  auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < repeats; ++r) fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / repeats;
}

void report(const char* name, double serial_ms, double parallel_ms,
            double max_diff) {
  std::printf("%-22s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   max|diff| %.3g\n",
              name, serial_ms, parallel_ms,
              parallel_ms > 0 ? serial_ms / parallel_ms : 0.0, max_diff);
}

void bench_gram_matvec(int threads) {
  const std::size_t rows = 20000, dim = 96;
  Rng rng(7);
  std::vector<double> x(rows * dim);
  std::vector<double> v(dim);
  for (double& e : x) e = rng.gaussian();
  for (double& e : v) e = rng.gaussian();

  std::vector<double> serial, parallel;
  double s = time_ms([&] { serial = dcgen::kernels::gram_matvec_serial(x, rows, dim, v); }, 20);
  double p = time_ms([&] { parallel = dcgen::kernels::gram_matvec(x, rows, dim, v, threads); }, 20);
  double diff = 0;
  for (std::size_t j = 0; j < dim; ++j)
    diff = std::max(diff, std::abs(serial[j] - parallel[j]));
  report("gram_matvec", s, p, diff);
}

dcgen::IdPairs synthetic_pairs(int n, int vocab, Rng& rng) {
  dcgen::IdPairs pairs;
  pairs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    dcgen::IdSeq src(static_cast<std::size_t>(4 + rng.uniform_int(8)));
    dcgen::IdSeq tgt(static_cast<std::size_t>(4 + rng.uniform_int(8)));
    for (int& w : src) w = 4 + rng.uniform_int(vocab - 4);
    for (int& w : tgt) w = 4 + rng.uniform_int(vocab - 4);
    pairs.push_back({std::move(src), std::move(tgt)});
  }
  return pairs;
}

double table_diff(const dcgen::LexicalTransTable& a, const dcgen::LexicalTransTable& b) {
  double diff = 0;
  for (int src : a.source_ids()) {
    const auto* ra = a.row(src);
    const auto* rb = b.row(src);
    for (std::size_t i = 0; i < ra->size(); ++i)
      diff = std::max(diff, std::abs((*ra)[i].second - (*rb)[i].second));
  }
  return diff;
}

void bench_ibm1(int threads) {
  Rng rng(11);
  dcgen::IdPairs pairs = synthetic_pairs(8000, 600, rng);
  dcgen::Ibm1Trainer serial(pairs, 600);
  dcgen::Ibm1Trainer parallel(pairs, 600);
  double s = time_ms([&] { serial.step_serial(); }, 3);
  double p = time_ms([&] { parallel.step(threads); }, 3);
  report("ibm1_em_step", s, p, table_diff(serial.table(), parallel.table()));
}

void bench_embed_batch(int threads) {
  const int words = 3000, dim = 64;
  Rng rng(13);
  dcgen::WordVectors vectors;
  std::unordered_map<std::string, double> unigram;
  for (int w = 0; w < words; ++w) {
    std::vector<double> v(dim);
    for (double& e : v) e = rng.gaussian();
    std::string token = "w" + std::to_string(w);
    vectors.add(token, v);
    unigram[token] = 1.0 / words;
  }
  std::vector<dcgen::TokenSeq> sentences(30000);
  for (auto& s : sentences) {
    s.resize(static_cast<std::size_t>(5 + rng.uniform_int(10)));
    for (auto& t : s) t = "w" + std::to_string(rng.uniform_int(words));
  }
  dcgen::SifModel model = dcgen::fit_sif(std::move(vectors), std::move(unigram),
                                         sentences, 1e-3, threads);

  std::vector<std::vector<double>> serial, parallel;
  double s = time_ms([&] { serial = dcgen::embed_batch(model, sentences, 1); }, 3);
  double p = time_ms([&] { parallel = dcgen::embed_batch(model, sentences, threads); }, 3);
  double diff = 0;
  for (std::size_t i = 0; i < serial.size(); ++i)
    for (std::size_t j = 0; j < serial[i].size(); ++j)
      diff = std::max(diff, std::abs(serial[i][j] - parallel[i][j]));
  report("embed_batch", s, p, diff);
}

}  // namespace

int main() {
  int threads = dcgen::kernels::max_threads();
  std::printf("threads: %d\n", threads);
  bench_gram_matvec(threads);
  bench_ibm1(threads);
  bench_embed_batch(threads);
  return 0;
}
