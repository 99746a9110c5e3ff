// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations used as test oracles. Nothing here
// calls into the library's math; it only reads parameter tensors.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "slr/nn_core.hpp"

namespace slr::oracle {

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// y = W x + b, W row-major (out x in).
inline std::vector<double> affine(const Tensor& w, const Tensor* b, std::span<const double> x) {
  std::vector<double> y(w.rows(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double s = b ? b->data[i] : 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) s += w.data[i * w.cols() + j] * x[j];
    y[i] = s;
  }
  return y;
}

/// Straight-line forward pass of one sequence; returns the logits.
inline std::vector<double> naive_logits(const TensorBundle& p, std::span<const double> frames,
                                        std::size_t length) {
  const std::size_t in = p.dims.input, g = p.dims.gru_hidden;
  std::vector<double> h(g, 0.0);
  for (std::size_t t = 0; t < length; ++t) {
    std::vector<double> m = affine(p.w1, &p.b1, frames.subspan(t * in, in));
    for (double& v : m) v = std::max(v, 0.0);
    const auto wz = affine(p.wz, &p.bz, m), uz = affine(p.uz, nullptr, h);
    const auto wr = affine(p.wr, &p.br, m), ur = affine(p.ur, nullptr, h);
    std::vector<double> z(g), r(g), rh(g);
    for (std::size_t i = 0; i < g; ++i) {
      z[i] = sigmoid(wz[i] + uz[i]);
      r[i] = sigmoid(wr[i] + ur[i]);
      rh[i] = r[i] * h[i];
    }
    const auto wn = affine(p.wn, &p.bn, m), un = affine(p.un, nullptr, rh);
    for (std::size_t i = 0; i < g; ++i) {
      const double n = std::tanh(wn[i] + un[i]);
      h[i] = (1.0 - z[i]) * n + z[i] * h[i];
    }
  }
  return affine(p.wo, &p.bo, h);
}

inline double naive_nll(std::span<const double> logits, std::size_t target) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double v : logits) s += std::exp(v - mx);
  return -(logits[target] - mx - std::log(s));
}

struct SeqRef {
  std::span<const double> frames;
  std::size_t length;
  std::size_t target;
};

/// Batch-mean cross-entropy computed with the naive forward pass.
inline double naive_loss(const TensorBundle& p, std::span<const SeqRef> seqs) {
  double s = 0.0;
  for (const auto& q : seqs) s += naive_nll(naive_logits(p, q.frames, q.length), q.target);
  return s / static_cast<double>(seqs.size());
}

/// Symmetric relative error with an absolute floor for near-zero gradients.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central finite difference of naive_loss with respect to every parameter.
inline std::vector<std::vector<double>> numeric_gradient(ModelParams p, std::span<const SeqRef> seqs,
                                                         double h = 1e-5) {
  std::vector<std::vector<double>> out;
  for (Tensor* t : p.tensors()) {
    std::vector<double> g(t->size());
    for (std::size_t i = 0; i < t->size(); ++i) {
      const double keep = t->data[i];
      t->data[i] = keep + h;
      const double up = naive_loss(p, seqs);
      t->data[i] = keep - h;
      const double down = naive_loss(p, seqs);
      t->data[i] = keep;
      g[i] = (up - down) / (2.0 * h);
    }
    out.push_back(std::move(g));
  }
  return out;
}

// Per-class precision/recall from a list of (true, predicted) pairs.
struct BruteMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

inline BruteMetrics brute_metrics(std::span<const std::pair<std::size_t, std::size_t>> samples,
                                  std::size_t classes) {
  BruteMetrics m;
  std::size_t correct = 0;
  for (const auto& [t, p] : samples) correct += t == p;
  m.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(samples.size());
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t predicted = 0, actual = 0, hit = 0;
    for (const auto& [t, p] : samples) {
      predicted += p == c;
      actual += t == c;
      hit += t == c && p == c;
    }
    const double precision = predicted ? static_cast<double>(hit) / static_cast<double>(predicted) : 0.0;
    const double recall = actual ? static_cast<double>(hit) / static_cast<double>(actual) : 0.0;
    if (precision + recall > 0.0) f1_sum += 2.0 * precision * recall / (precision + recall);
  }
  m.macro_f1 = 100.0 * f1_sum / static_cast<double>(classes);
  return m;
}

}  // namespace slr::oracle
