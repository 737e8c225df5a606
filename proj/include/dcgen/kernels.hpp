#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace dcgen::kernels {

// Number of hardware threads OpenMP will use; 1 when built without OpenMP.
int max_threads();

// Maps a requested thread count onto something usable: values < 1 mean
// "use everything", anything else is taken as-is.
int clamp_threads(int requested);

inline constexpr std::size_t kDefaultChunks = 64;

// Runs fn(i) for i in [0, n). Iterations must be independent; outputs are
// then identical for any thread count.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
#ifdef _OPENMP
  int t = clamp_threads(threads);
  if (t > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(t)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      fn(static_cast<std::size_t>(i));
    return;
  }
#else
  (void)threads;
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

// Order-stable parallel reduction. [0, n) is cut into num_chunks contiguous
// ranges whose boundaries depend only on n, each range is reduced serially by
// chunk_fn(begin, end, acc), and the per-chunk accumulators are folded in
// chunk order by join(into, part). Because neither the ranges nor the fold
// order depend on the schedule, the result is bit-identical for any thread
// count (it differs from a single left-to-right pass only by the fixed
// chunking).
template <typename Acc, typename ChunkFn, typename JoinFn>
Acc chunked_reduce(std::size_t n, int threads, Acc init, ChunkFn&& chunk_fn,
                   JoinFn&& join, std::size_t num_chunks = kDefaultChunks) {
  if (n == 0) return init;
  num_chunks = std::min(std::max<std::size_t>(num_chunks, 1), n);
  const std::size_t base = n / num_chunks;
  const std::size_t rem = n % num_chunks;
  std::vector<Acc> parts(num_chunks, init);
  parallel_for(num_chunks, threads, [&](std::size_t c) {
    std::size_t begin = c * base + std::min(c, rem);
    std::size_t end = begin + base + (c < rem ? 1 : 0);
    chunk_fn(begin, end, parts[c]);
  });
  Acc acc = std::move(parts[0]);
  for (std::size_t c = 1; c < num_chunks; ++c) join(acc, parts[c]);
  return acc;
}

// y = X^T (X v) for row-major X of shape rows x dim. Parallel version uses
// the chunked reduction above; the serial version is the naive reference
// the tests compare against.
std::vector<double> gram_matvec(const std::vector<double>& x, std::size_t rows,
                                std::size_t dim, const std::vector<double>& v,
                                int threads);
std::vector<double> gram_matvec_serial(const std::vector<double>& x,
                                       std::size_t rows, std::size_t dim,
                                       const std::vector<double>& v);

}  // namespace dcgen::kernels
