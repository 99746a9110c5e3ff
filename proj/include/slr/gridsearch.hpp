// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slr/training.hpp"

namespace slr {

struct GridPair {
  std::size_t mlp_hidden = 0;
  std::size_t gru_hidden = 0;
  friend bool operator==(const GridPair&, const GridPair&) = default;
};

/// The five (MLP, GRU) rows searched by default.
std::vector<GridPair> default_grid_pairs();

enum class SelectionMetric { accuracy, macro_f1 };

std::string_view to_string(SelectionMetric metric);
SelectionMetric parse_selection_metric(std::string_view text);

/// accuracy for a balanced class distribution, macro_f1 otherwise.
SelectionMetric default_selection_metric(const Dataset& data);

struct GridSpec {
  std::vector<GridPair> pairs = default_grid_pairs();
  SelectionMetric metric = SelectionMetric::accuracy;
  TrainConfig train;
  std::uint64_t init_seed = 0;
  std::size_t input = kFrameWidth;
};

void validate(const GridSpec& spec);

/// One row of the results table.
struct GridRow {
  GridPair pair;
  double accuracy = 0.0;  // best over epochs
  double macro_f1 = 0.0;  // best over epochs
  std::size_t best_accuracy_epoch = 0;
  std::size_t best_macro_f1_epoch = 0;
  std::size_t stopped_epoch = 0;

  double metric(SelectionMetric m) const;
  std::size_t best_epoch(SelectionMetric m) const;
};

struct GridResult {
  std::vector<GridRow> rows;
  SelectionMetric metric = SelectionMetric::accuracy;
  std::size_t winner = 0;
};

struct Candidate {
  double metric = 0.0;
  std::size_t best_epoch = 0;
};

/// Highest metric wins; ties go to the smaller best epoch, then list order.
std::size_t select_winner(std::span<const Candidate> candidates);

/// Trains one fresh model per pair (up to `jobs` at once) and selects a
/// winner. Per-pair results do not depend on `jobs`.
GridResult run_grid(const GridSpec& spec, const Dataset& train_set, const Dataset& eval_set,
                    int jobs = 1);

/// `mlp,gru,accuracy,macro_f1,best_epoch,stopped_epoch`
std::string grid_csv(const GridResult& result);

}  // namespace slr
