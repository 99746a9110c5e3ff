// SPDX-License-Identifier: Apache-2.0
#include "slr/gridsearch.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>

#include "slr/error.hpp"

namespace slr {

std::vector<GridPair> default_grid_pairs() {
  return {{256, 512}, {512, 1024}, {1024, 2048}, {2000, 3000}, {2048, 4096}};
}

std::string_view to_string(SelectionMetric metric) {
  return metric == SelectionMetric::accuracy ? "accuracy" : "macro_f1";
}

SelectionMetric parse_selection_metric(std::string_view text) {
  if (text == "accuracy") return SelectionMetric::accuracy;
  if (text == "macro_f1") return SelectionMetric::macro_f1;
  throw Error(ErrorKind::invalid_argument, "unknown metric '" + std::string(text) + "'");
}

SelectionMetric default_selection_metric(const Dataset& data) {
  const auto counts = data.class_counts();
  const bool balanced = std::adjacent_find(counts.begin(), counts.end(),
                                           std::not_equal_to<>()) == counts.end();
  return balanced ? SelectionMetric::accuracy : SelectionMetric::macro_f1;
}

void validate(const GridSpec& spec) {
  if (spec.pairs.empty()) throw Error(ErrorKind::invalid_argument, "grid has no pairs");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& p : spec.pairs) {
    if (p.mlp_hidden == 0 || p.gru_hidden == 0)
      throw Error(ErrorKind::invalid_argument, "grid pair with a zero size");
    if (!seen.emplace(p.mlp_hidden, p.gru_hidden).second)
      throw Error(ErrorKind::invalid_argument, "duplicate grid pair " +
                                                   std::to_string(p.mlp_hidden) + "x" +
                                                   std::to_string(p.gru_hidden));
  }
  validate(spec.train);
}

double GridRow::metric(SelectionMetric m) const {
  return m == SelectionMetric::accuracy ? accuracy : macro_f1;
}

std::size_t GridRow::best_epoch(SelectionMetric m) const {
  return m == SelectionMetric::accuracy ? best_accuracy_epoch : best_macro_f1_epoch;
}

std::size_t select_winner(std::span<const Candidate> candidates) {
  if (candidates.empty()) throw Error(ErrorKind::invalid_argument, "no grid candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const Candidate& c = candidates[i];
    const Candidate& b = candidates[best];
    if (c.metric > b.metric || (c.metric == b.metric && c.best_epoch < b.best_epoch)) best = i;
  }
  return best;
}

GridResult run_grid(const GridSpec& spec, const Dataset& train_set, const Dataset& eval_set,
                    int jobs) {
  validate(spec);
  if (jobs < 1) throw Error(ErrorKind::invalid_argument, "jobs must be >= 1");
  const auto n = static_cast<std::ptrdiff_t>(spec.pairs.size());
  std::vector<GridRow> rows(spec.pairs.size());
  std::vector<std::optional<std::string>> failures(spec.pairs.size());

  // Kernels inside a run stay on one thread here: nested regions are inactive.
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs) if (jobs > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const GridPair& pair = spec.pairs[static_cast<std::size_t>(i)];
    try {
      const Dims dims{spec.input, pair.mlp_hidden, pair.gru_hidden, train_set.num_classes};
      const TrainResult r = train(init_params(dims, spec.init_seed), train_set, spec.train, &eval_set);
      GridRow& row = rows[static_cast<std::size_t>(i)];
      row.pair = pair;
      row.accuracy = r.best_accuracy.value_or(0.0);
      row.macro_f1 = r.best_macro_f1.value_or(0.0);
      row.best_accuracy_epoch = r.best_accuracy_epoch.value_or(0);
      row.best_macro_f1_epoch = r.best_macro_f1_epoch.value_or(0);
      row.stopped_epoch = r.stopped_epoch;
    } catch (const std::exception& e) {
      failures[static_cast<std::size_t>(i)] = e.what();
    }
  }

  std::string report;
  for (std::size_t i = 0; i < failures.size(); ++i)
    if (failures[i])
      report += " [" + std::to_string(spec.pairs[i].mlp_hidden) + "x" +
                std::to_string(spec.pairs[i].gru_hidden) + ": " + *failures[i] + "]";
  if (!report.empty()) throw Error(ErrorKind::invalid_argument, "grid run failed:" + report);

  GridResult result;
  result.rows = std::move(rows);
  result.metric = spec.metric;
  std::vector<Candidate> cands;
  for (const auto& r : result.rows) cands.push_back({r.metric(spec.metric), r.best_epoch(spec.metric)});
  result.winner = select_winner(cands);
  return result;
}

std::string grid_csv(const GridResult& result) {
  std::ostringstream out;
  out.precision(17);
  out << "mlp,gru,accuracy,macro_f1,best_epoch,stopped_epoch\n";
  for (const auto& r : result.rows)
    out << r.pair.mlp_hidden << ',' << r.pair.gru_hidden << ',' << r.accuracy << ','
        << r.macro_f1 << ',' << r.best_epoch(result.metric) << ',' << r.stopped_epoch << '\n';
  return out.str();
}

}  // namespace slr
