// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "slr/gridsearch.hpp"
#include "slr/training.hpp"
#include "slr/transfer.hpp"

namespace slr {

/// Declarative description of a `train` run, loadable with `--config`.
/// Explicit command-line flags override the file.
struct ExperimentConfig {
  std::string manifest;
  std::size_t mlp_hidden = 256;
  std::size_t gru_hidden = 512;
  TrainConfig train;
  std::optional<std::uint64_t> init_seed;  // defaults to train.seed
  std::optional<std::string> init_from;
  TransferScope transfer_scope = TransferScope::mlp_only;
  std::optional<double> filter_threshold;
  std::optional<SelectionMetric> metric;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

std::string experiment_config_json(const ExperimentConfig& config);
ExperimentConfig parse_experiment_config(std::string_view json_text);

/// Runs one `slr` invocation. Returns the process exit code: 0 on success,
/// 1 for runtime errors, 2 for usage errors. Errors are written to `err` as a
/// single line `error: <kind>: <message>`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace slr
