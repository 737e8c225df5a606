#include "dcgen/kernels.hpp"

#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dcgen::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int clamp_threads(int requested) {
  return requested < 1 ? max_threads() : requested;
}

std::vector<double> gram_matvec(const std::vector<double>& x, std::size_t rows,
                                std::size_t dim, const std::vector<double>& v,
                                int threads) {
  if (x.size() != rows * dim || v.size() != dim)
    throw std::invalid_argument("gram_matvec: shape mismatch");
  auto chunk = [&](std::size_t begin, std::size_t end, std::vector<double>& acc) {
    for (std::size_t r = begin; r < end; ++r) {
      const double* row = x.data() + r * dim;
      double z = 0.0;
      for (std::size_t j = 0; j < dim; ++j) z += row[j] * v[j];
      for (std::size_t j = 0; j < dim; ++j) acc[j] += z * row[j];
    }
  };
  auto join = [&](std::vector<double>& into, const std::vector<double>& part) {
    for (std::size_t j = 0; j < dim; ++j) into[j] += part[j];
  };
  return chunked_reduce(rows, threads, std::vector<double>(dim, 0.0), chunk, join);
}

std::vector<double> gram_matvec_serial(const std::vector<double>& x,
                                       std::size_t rows, std::size_t dim,
                                       const std::vector<double>& v) {
  if (x.size() != rows * dim || v.size() != dim)
    throw std::invalid_argument("gram_matvec: shape mismatch");
  std::vector<double> y(dim, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = x.data() + r * dim;
    double z = 0.0;
    for (std::size_t j = 0; j < dim; ++j) z += row[j] * v[j];
    for (std::size_t j = 0; j < dim; ++j) y[j] += z * row[j];
  }
  return y;
}

}  // namespace dcgen::kernels
