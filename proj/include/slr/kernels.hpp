// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major kernels used by the network. Every kernel exists twice:
// the OpenMP version in slr::kernels and a plain loop-nest reference in
// slr::kernels::serial. Both accumulate each output element in the same
// order, so with floating-point contraction disabled the results are
// bitwise identical (tests/test_kernels.cpp checks this).
#pragma once

#include <cstddef>
#include <span>

namespace slr::kernels {

/// c(m x n) += a(m x k) * b(k x n)
void gemm_nn_acc(std::size_t m, std::size_t k, std::size_t n,
                 std::span<const double> a, std::span<const double> b,
                 std::span<double> c);

/// c(m x n) += a(k x m)^T * b(k x n)
void gemm_tn_acc(std::size_t m, std::size_t k, std::size_t n,
                 std::span<const double> a, std::span<const double> b,
                 std::span<double> c);

/// out(cols x rows) = in(rows x cols)^T
void transpose(std::size_t rows, std::size_t cols, std::span<const double> in,
               std::span<double> out);

/// Each of the `rows` rows of c(rows x n) is set to bias(n).
void broadcast_rows(std::size_t rows, std::size_t n,
                    std::span<const double> bias, std::span<double> c);

/// out(n) += column sums of a(rows x n)
void column_sums_acc(std::size_t rows, std::size_t n,
                     std::span<const double> a, std::span<double> out);

namespace serial {

void gemm_nn_acc(std::size_t m, std::size_t k, std::size_t n,
                 std::span<const double> a, std::span<const double> b,
                 std::span<double> c);

void gemm_tn_acc(std::size_t m, std::size_t k, std::size_t n,
                 std::span<const double> a, std::span<const double> b,
                 std::span<double> c);

void transpose(std::size_t rows, std::size_t cols, std::span<const double> in,
               std::span<double> out);

void column_sums_acc(std::size_t rows, std::size_t n,
                     std::span<const double> a, std::span<double> out);

}  // namespace serial

/// Number of OpenMP threads the parallel kernels may use (1 without OpenMP).
int max_threads() noexcept;

}  // namespace slr::kernels
