// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <vector>

#include "slr/kernels.hpp"
#include "slr/rng.hpp"

namespace {

using namespace slr;

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Shapes from a batch-32 step: input projection, recurrent product, weight gradient.
void shapes(benchmark::internal::Benchmark* b) {
  b->Args({32, 138, 256})->Args({32, 256, 512})->Args({32, 512, 512})->Args({256, 32, 512});
}

template <void (*Gemm)(std::size_t, std::size_t, std::size_t, std::span<const double>,
                       std::span<const double>, std::span<double>)>
void BM_gemm_nn(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(2));
  const auto a = random_vec(m * k, 1), b = random_vec(k * n, 2);
  std::vector<double> c(m * n, 0.0);
  for (auto _ : state) {
    Gemm(m, k, n, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOPS"] =
      benchmark::Counter(2.0 * m * k * n, benchmark::Counter::kIsIterationInvariantRate,
                         benchmark::Counter::kIs1000);
}

template <void (*Gemm)(std::size_t, std::size_t, std::size_t, std::span<const double>,
                       std::span<const double>, std::span<double>)>
void BM_gemm_tn(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(2));
  const auto a = random_vec(k * m, 3), b = random_vec(k * n, 4);
  std::vector<double> c(m * n, 0.0);
  for (auto _ : state) {
    Gemm(m, k, n, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOPS"] =
      benchmark::Counter(2.0 * m * k * n, benchmark::Counter::kIsIterationInvariantRate,
                         benchmark::Counter::kIs1000);
}

void BM_column_sums_parallel(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0)), n = static_cast<std::size_t>(state.range(1));
  const auto a = random_vec(rows * n, 5);
  std::vector<double> out(n, 0.0);
  for (auto _ : state) {
    kernels::column_sums_acc(rows, n, a, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_column_sums_serial(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0)), n = static_cast<std::size_t>(state.range(1));
  const auto a = random_vec(rows * n, 5);
  std::vector<double> out(n, 0.0);
  for (auto _ : state) {
    kernels::serial::column_sums_acc(rows, n, a, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_gemm_nn<kernels::gemm_nn_acc>)->Name("gemm_nn/parallel")->Apply(shapes);
BENCHMARK(BM_gemm_nn<kernels::serial::gemm_nn_acc>)->Name("gemm_nn/serial")->Apply(shapes);
BENCHMARK(BM_gemm_tn<kernels::gemm_tn_acc>)->Name("gemm_tn/parallel")->Apply(shapes);
BENCHMARK(BM_gemm_tn<kernels::serial::gemm_tn_acc>)->Name("gemm_tn/serial")->Apply(shapes);
BENCHMARK(BM_column_sums_parallel)->Name("column_sums/parallel")->Args({256, 512});
BENCHMARK(BM_column_sums_serial)->Name("column_sums/serial")->Args({256, 512});

BENCHMARK_MAIN();
