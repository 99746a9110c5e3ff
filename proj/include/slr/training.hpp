// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slr/keypoint_data.hpp"
#include "slr/metrics.hpp"
#include "slr/nn_core.hpp"

namespace slr {

/// Class names in index order.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::string> names);

  /// Sorted distinct labels of the manifest rows.
  static LabelMap from_manifest(const Manifest& manifest);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  std::optional<std::size_t> find(std::string_view label) const;
  /// Throws Error(label) for an unknown label.
  std::size_t index_of(std::string_view label) const;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  std::vector<std::string> names_;
};

struct Model {
  ModelParams params;
  LabelMap labels;
};

struct Sample {
  std::vector<double> frames;  // length x input, row-major
  std::size_t length = 0;
  std::size_t label = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t num_classes = 0;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
  /// Samples per class index.
  std::vector<std::size_t> class_counts() const;
};

Dataset make_dataset(std::span<const KeypointSequence> sequences, const LabelMap& labels);

enum class Monitor { train_loss, eval_loss };

struct TrainConfig {
  double learning_rate = 1e-5;
  std::size_t batch_size = 32;
  std::size_t patience_epochs = 200;
  std::optional<std::size_t> max_epochs;
  std::uint64_t seed = 0;
  bool shuffle = true;
  Monitor monitor = Monitor::train_loss;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void validate(const TrainConfig& config);

/// Stops once `patience` epochs have passed without a strictly lower loss.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Records the loss of `epoch` (1-based, increasing); true means stop now.
  bool observe(std::size_t epoch, double loss);

  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }
  bool improved_last() const { return improved_last_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
  bool improved_last_ = false;
};

struct EvalResult {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double loss = 0.0;
  ConfusionMatrix confusion;
};

/// Argmax prediction over batches of `batch_size`.
EvalResult evaluate(const ModelParams& params, const Dataset& data, std::size_t batch_size = 32);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  std::optional<double> eval_loss;
  std::optional<double> accuracy;
  std::optional<double> macro_f1;
};

enum class StopReason { patience, max_epochs, callback };

struct TrainResult {
  ModelParams best_params;
  std::vector<EpochRecord> history;
  std::size_t best_loss_epoch = 0;
  double best_loss = 0.0;
  std::optional<std::size_t> best_accuracy_epoch;
  std::optional<double> best_accuracy;
  std::optional<std::size_t> best_macro_f1_epoch;
  std::optional<double> best_macro_f1;
  std::size_t stopped_epoch = 0;
  StopReason stop_reason = StopReason::patience;
  TrainConfig config;
};

/// Called after every epoch; returning false ends training.
using EpochCallback = std::function<bool(const EpochRecord&, const ModelParams&)>;

TrainResult train(const ModelParams& initial, const Dataset& train_set, const TrainConfig& config,
                  const Dataset* eval_set = nullptr, const EpochCallback& on_epoch = {});

/// `epoch,loss,accuracy,macro_f1`; eval columns empty when not recorded.
std::string history_csv(const TrainResult& result);

/// JSON summary of a run: best epochs, best values, stop reason and config.
std::string summary_json(const TrainResult& result);

std::string_view to_string(Monitor monitor);
std::string_view to_string(StopReason reason);

}  // namespace slr
