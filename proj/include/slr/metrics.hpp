// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace slr {

/// K x K counts; rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0);

  std::size_t classes() const { return classes_; }
  std::uint64_t total() const;

  void add(std::size_t true_class, std::size_t predicted_class, std::uint64_t n = 1);
  std::uint64_t at(std::size_t true_class, std::size_t predicted_class) const;

  std::uint64_t true_positives(std::size_t c) const;
  std::uint64_t false_positives(std::size_t c) const;
  std::uint64_t false_negatives(std::size_t c) const;
  std::uint64_t true_negatives(std::size_t c) const;

  /// Cell-wise addition; shards of an evaluation merge this way.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  std::vector<std::vector<std::uint64_t>> rows() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

/// Correct / total, in percent.
double accuracy(const ConfusionMatrix& cm);

/// Unweighted mean of per-class F1 over all K classes, in percent. Classes
/// with zero precision+recall (including absent ones) contribute 0.
double macro_f1(const ConfusionMatrix& cm);

}  // namespace slr
