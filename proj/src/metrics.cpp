// SPDX-License-Identifier: Apache-2.0
#include "slr/metrics.hpp"

#include <numeric>
#include <string>

#include "slr/error.hpp"

namespace slr {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

void ConfusionMatrix::add(std::size_t t, std::size_t p, std::uint64_t n) {
  if (t >= classes_ || p >= classes_)
    throw Error(ErrorKind::label, "class index outside confusion matrix of size " +
                                      std::to_string(classes_));
  counts_[t * classes_ + p] += n;
}

std::uint64_t ConfusionMatrix::at(std::size_t t, std::size_t p) const {
  return counts_.at(t * classes_ + p);
}

std::uint64_t ConfusionMatrix::true_positives(std::size_t c) const { return at(c, c); }

std::uint64_t ConfusionMatrix::false_positives(std::size_t c) const {
  std::uint64_t n = 0;
  for (std::size_t t = 0; t < classes_; ++t)
    if (t != c) n += at(t, c);
  return n;
}

std::uint64_t ConfusionMatrix::false_negatives(std::size_t c) const {
  std::uint64_t n = 0;
  for (std::size_t p = 0; p < classes_; ++p)
    if (p != c) n += at(c, p);
  return n;
}

std::uint64_t ConfusionMatrix::true_negatives(std::size_t c) const {
  return total() - true_positives(c) - false_positives(c) - false_negatives(c);
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes_ != classes_)
    throw Error(ErrorKind::dimension, "cannot merge confusion matrices of different size");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

std::vector<std::vector<std::uint64_t>> ConfusionMatrix::rows() const {
  std::vector<std::vector<std::uint64_t>> out(classes_);
  for (std::size_t t = 0; t < classes_; ++t)
    out[t].assign(counts_.begin() + static_cast<std::ptrdiff_t>(t * classes_),
                  counts_.begin() + static_cast<std::ptrdiff_t>((t + 1) * classes_));
  return out;
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw Error(ErrorKind::invalid_argument, "accuracy of an empty confusion matrix");
  std::uint64_t correct = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) correct += cm.at(c, c);
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

double macro_f1(const ConfusionMatrix& cm) {
  if (cm.total() == 0)
    throw Error(ErrorKind::invalid_argument, "macro F1 of an empty confusion matrix");
  double sum = 0.0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const auto tp = static_cast<double>(cm.true_positives(c));
    const auto fp = static_cast<double>(cm.false_positives(c));
    const auto fn = static_cast<double>(cm.false_negatives(c));
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    if (precision + recall > 0) sum += 2.0 * precision * recall / (precision + recall);
  }
  return 100.0 * sum / static_cast<double>(cm.classes());
}

}  // namespace slr
