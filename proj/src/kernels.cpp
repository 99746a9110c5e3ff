// SPDX-License-Identifier: Apache-2.0
#include "slr/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slr::kernels {

namespace {

// Register tile: kTileRows x kTileCols accumulators live in vector registers
// for the whole k loop.
constexpr std::size_t kTileRows = 8;
constexpr std::size_t kTileCols = 32;

// Work below this many multiply-adds runs on the calling thread.
constexpr std::size_t kParallelThreshold = 1 << 15;

constexpr std::size_t kPanel = 64;

// A(i, p) lives at a[i * row_stride + p * col_stride], so the same tile code
// serves both a and a^T.
struct StridedA {
  const double* data;
  std::size_t row_stride;
  std::size_t col_stride;
  double operator()(std::size_t i, std::size_t p) const {
    return data[i * row_stride + p * col_stride];
  }
};

void full_tile(std::size_t k, std::size_t n, StridedA a, std::size_t i0,
               const double* b, std::size_t j0, double* c) {
  double acc[kTileRows][kTileCols];
  for (std::size_t r = 0; r < kTileRows; ++r)
    for (std::size_t q = 0; q < kTileCols; ++q) acc[r][q] = c[(i0 + r) * n + j0 + q];
  for (std::size_t p = 0; p < k; ++p) {
    const double* bp = b + p * n + j0;
    for (std::size_t r = 0; r < kTileRows; ++r) {
      const double av = a(i0 + r, p);
#pragma omp simd
      for (std::size_t q = 0; q < kTileCols; ++q) acc[r][q] = std::fma(av, bp[q], acc[r][q]);
    }
  }
  for (std::size_t r = 0; r < kTileRows; ++r)
    for (std::size_t q = 0; q < kTileCols; ++q) c[(i0 + r) * n + j0 + q] = acc[r][q];
}

void edge_tile(std::size_t k, std::size_t n, StridedA a, std::size_t i0, std::size_t i1,
               const double* b, std::size_t j0, std::size_t j1, double* c) {
  for (std::size_t i = i0; i < i1; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      const double* bp = b + p * n;
      for (std::size_t j = j0; j < j1; ++j) ci[j] = std::fma(av, bp[j], ci[j]);
    }
  }
}

// c(m x n) += A(m x k) * b(k x n), tiles distributed over threads. Each
// element is accumulated over p = 0..k-1 in order, like the reference.
void tiled_gemm(std::size_t m, std::size_t k, std::size_t n, StridedA a, const double* b,
                double* c) {
  const std::size_t row_tiles = (m + kTileRows - 1) / kTileRows;
  const std::size_t col_tiles = (n + kTileCols - 1) / kTileCols;
  const auto tiles = static_cast<std::ptrdiff_t>(row_tiles * col_tiles);
  const bool par = m * k * n >= kParallelThreshold;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t t = 0; t < tiles; ++t) {
    // column-tile major so consecutive tiles reuse the same panel of b
    const std::size_t jt = static_cast<std::size_t>(t) / row_tiles;
    const std::size_t it = static_cast<std::size_t>(t) % row_tiles;
    const std::size_t i0 = it * kTileRows, j0 = jt * kTileCols;
    const std::size_t i1 = std::min(m, i0 + kTileRows), j1 = std::min(n, j0 + kTileCols);
    if (i1 - i0 == kTileRows && j1 - j0 == kTileCols)
      full_tile(k, n, a, i0, b, j0, c);
    else
      edge_tile(k, n, a, i0, i1, b, j0, j1, c);
  }
}

}  // namespace

void gemm_nn_acc(std::size_t m, std::size_t k, std::size_t n,
                 std::span<const double> a, std::span<const double> b,
                 std::span<double> c) {
  assert(a.size() >= m * k && b.size() >= k * n && c.size() >= m * n);
  tiled_gemm(m, k, n, StridedA{a.data(), k, 1}, b.data(), c.data());
}

void gemm_tn_acc(std::size_t m, std::size_t k, std::size_t n,
                 std::span<const double> a, std::span<const double> b,
                 std::span<double> c) {
  assert(a.size() >= k * m && b.size() >= k * n && c.size() >= m * n);
  tiled_gemm(m, k, n, StridedA{a.data(), 1, m}, b.data(), c.data());
}

void transpose(std::size_t rows, std::size_t cols, std::span<const double> in,
               std::span<double> out) {
  assert(in.size() >= rows * cols && out.size() >= rows * cols);
  constexpr std::size_t tile = 32;
  const bool par = rows * cols >= kParallelThreshold;
  const std::size_t row_tiles = (rows + tile - 1) / tile;
#pragma omp parallel for schedule(static) if (par)
  for (std::size_t q = 0; q < row_tiles; ++q) {
    const std::size_t i0 = q * tile;
    const std::size_t i1 = std::min(rows, i0 + tile);
    for (std::size_t j0 = 0; j0 < cols; j0 += tile) {
      const std::size_t j1 = std::min(cols, j0 + tile);
      for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = j0; j < j1; ++j) out[j * rows + i] = in[i * cols + j];
    }
  }
}

void broadcast_rows(std::size_t rows, std::size_t n,
                    std::span<const double> bias, std::span<double> c) {
  for (std::size_t i = 0; i < rows; ++i)
    std::copy_n(bias.data(), n, c.data() + i * n);
}

void column_sums_acc(std::size_t rows, std::size_t n,
                     std::span<const double> a, std::span<double> out) {
  const bool par = rows * n >= kParallelThreshold;
  const std::size_t panels = (n + kPanel - 1) / kPanel;
#pragma omp parallel for schedule(static) if (par)
  for (std::size_t q = 0; q < panels; ++q) {
    const std::size_t j0 = q * kPanel;
    const std::size_t j1 = std::min(n, j0 + kPanel);
    for (std::size_t i = 0; i < rows; ++i) {
      const double* ai = a.data() + i * n;
#pragma omp simd
      for (std::size_t j = j0; j < j1; ++j) out[j] += ai[j];
    }
  }
}

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void gemm_nn_acc(std::size_t m, std::size_t k, std::size_t n,
                 std::span<const double> a, std::span<const double> b,
                 std::span<double> c) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] = std::fma(a[i * k + p], b[p * n + j], c[i * n + j]);
}

void gemm_tn_acc(std::size_t m, std::size_t k, std::size_t n,
                 std::span<const double> a, std::span<const double> b,
                 std::span<double> c) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] = std::fma(a[p * m + i], b[p * n + j], c[i * n + j]);
}

void transpose(std::size_t rows, std::size_t cols, std::span<const double> in,
               std::span<double> out) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = in[i * cols + j];
}

void column_sums_acc(std::size_t rows, std::size_t n,
                     std::span<const double> a, std::span<double> out) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += a[i * n + j];
}

}  // namespace serial

}  // namespace slr::kernels
