// Times the serial reference kernels against their OpenMP variants and the
// end-to-end co-attention forward at a few representative sizes.
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "deceptlab/coattention.hpp"
#include "deceptlab/kernels.hpp"
#include "deceptlab/rng.hpp"
#include "deceptlab/tensor.hpp"

using namespace deceptlab;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void bench_matmul(std::size_t m, std::size_t k, std::size_t n, int reps) {
  Rng rng(17);
  std::vector<double> a(m * k), b(k * n), c(m * n);
  for (double& v : a) v = rng.uniform(-1, 1);
  for (double& v : b) v = rng.uniform(-1, 1);
  const double serial = time_ms(
      [&]() { kernels::matmul_serial(a.data(), b.data(), c.data(), m, k, n, false); }, reps);
  const double parallel = time_ms(
      [&]() { kernels::matmul_omp(a.data(), b.data(), c.data(), m, k, n, false); }, reps);
  std::printf("matmul %4zux%4zux%4zu   serial %8.3f ms   omp %8.3f ms   speedup %.2fx\n", m,
              k, n, serial, parallel, serial / parallel);
}

void bench_coattend(std::size_t d, std::size_t n, std::size_t t, int reps) {
  Rng rng(29);
  auto params = CoAttentionParams::init(d, d, rng);
  auto c = Tensor::zeros(d, n);
  auto s = Tensor::zeros(d, t);
  for (double& v : c->data) v = rng.uniform(-1, 1);
  for (double& v : s->data) v = rng.uniform(-1, 1);
  ops::Mask mc(n, 1), ms(t, 1);
  NoGradGuard guard;
  const double ms_fwd =
      time_ms([&]() { coattend(c, s, params, mc, ms); }, reps);
  std::printf("coattend d=%zu N=%zu T=%zu   forward %8.3f ms\n", d, n, t, ms_fwd);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled; omp variants run serial\n");
#endif
  bench_matmul(64, 64, 64, 200);
  bench_matmul(256, 256, 256, 20);
  bench_matmul(768, 768, 768, 3);
  bench_coattend(64, 16, 16, 50);
  bench_coattend(768, 12, 20, 5);
  return 0;
}
