#pragma once

#include <cstddef>

// Dense inner-loop kernels. Every kernel has a serial reference and an
// OpenMP variant that computes bit-identical results (each output element
// is reduced in the same order by exactly one thread); the dispatching
// entry points pick the parallel path for large enough problems. The
// serial references stay compiled in for tests and benchmarks.
namespace deceptlab::kernels {

// c[m x n] = a[m x k] * b[k x n]; accumulate adds into c instead.
void matmul_serial(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void matmul_omp(const double* a, const double* b, double* c,
                std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

// c[m x n] = a[m x k] * b[n x k]^T
void matmul_nt_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void matmul_nt_omp(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

// c[m x n] = a[k x m]^T * b[k x n]
void matmul_tn_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void matmul_tn_omp(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

// Work threshold (multiply-adds) below which the serial path is used.
inline constexpr std::size_t kParallelThreshold = 1 << 15;

// Summation over n values in pairwise (tree) order; order-stable and
// independent of any chunking, so results do not move with thread count.
double pairwise_sum(const double* x, std::size_t n);

}  // namespace deceptlab::kernels
