#include "deceptlab/kernels.hpp"

#include <cstring>

namespace deceptlab::kernels {

namespace {

inline void clear_if(double* c, std::size_t n, bool accumulate) {
  if (!accumulate) std::memset(c, 0, n * sizeof(double));
}

// One output row of a[m x k] * b[k x n]; k ascending, j inner for locality.
inline void row_nn(const double* a, const double* b, double* c,
                   std::size_t i, std::size_t k, std::size_t n) {
  const double* ai = a + i * k;
  double* ci = c + i * n;
  for (std::size_t p = 0; p < k; ++p) {
    const double av = ai[p];
    const double* bp = b + p * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
  }
}

inline void row_nt(const double* a, const double* b, double* c,
                   std::size_t i, std::size_t k, std::size_t n) {
  const double* ai = a + i * k;
  double* ci = c + i * n;
  for (std::size_t j = 0; j < n; ++j) {
    const double* bj = b + j * k;
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
    ci[j] += acc;
  }
}

inline void row_tn(const double* a, const double* b, double* c,
                   std::size_t i, std::size_t k, std::size_t n, std::size_t m) {
  double* ci = c + i * n;
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a[p * m + i];
    const double* bp = b + p * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
  }
}

}  // namespace

void matmul_serial(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  clear_if(c, m * n, accumulate);
  for (std::size_t i = 0; i < m; ++i) row_nn(a, b, c, i, k, n);
}

void matmul_omp(const double* a, const double* b, double* c,
                std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  clear_if(c, m * n, accumulate);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(m); ++i)
    row_nn(a, b, c, static_cast<std::size_t>(i), k, n);
}

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (m * k * n >= kParallelThreshold && m > 1)
    matmul_omp(a, b, c, m, k, n, accumulate);
  else
    matmul_serial(a, b, c, m, k, n, accumulate);
}

void matmul_nt_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  clear_if(c, m * n, accumulate);
  for (std::size_t i = 0; i < m; ++i) row_nt(a, b, c, i, k, n);
}

void matmul_nt_omp(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  clear_if(c, m * n, accumulate);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(m); ++i)
    row_nt(a, b, c, static_cast<std::size_t>(i), k, n);
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (m * k * n >= kParallelThreshold && m > 1)
    matmul_nt_omp(a, b, c, m, k, n, accumulate);
  else
    matmul_nt_serial(a, b, c, m, k, n, accumulate);
}

void matmul_tn_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  clear_if(c, m * n, accumulate);
  for (std::size_t i = 0; i < m; ++i) row_tn(a, b, c, i, k, n, m);
}

void matmul_tn_omp(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  clear_if(c, m * n, accumulate);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(m); ++i)
    row_tn(a, b, c, static_cast<std::size_t>(i), k, n, m);
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (m * k * n >= kParallelThreshold && m > 1)
    matmul_tn_omp(a, b, c, m, k, n, accumulate);
  else
    matmul_tn_serial(a, b, c, m, k, n, accumulate);
}

double pairwise_sum(const double* x, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

}  // namespace deceptlab::kernels
