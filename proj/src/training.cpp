// SPDX-License-Identifier: Apache-2.0
#include "slr/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "json_io.hpp"

#include "slr/error.hpp"
#include "slr/rng.hpp"

namespace slr {

LabelMap::LabelMap(std::vector<std::string> names) : names_(std::move(names)) {
  std::set<std::string_view> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw Error(ErrorKind::label, "empty class label");
    if (!seen.insert(n).second) throw Error(ErrorKind::label, "duplicate class label '" + n + "'");
  }
}

LabelMap LabelMap::from_manifest(const Manifest& manifest) {
  std::set<std::string> labels;
  for (const auto& row : manifest.rows) labels.insert(row.label);
  return LabelMap({labels.begin(), labels.end()});
}

std::optional<std::size_t> LabelMap::find(std::string_view label) const {
  const auto it = std::find(names_.begin(), names_.end(), label);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::size_t LabelMap::index_of(std::string_view label) const {
  if (auto i = find(label)) return *i;
  throw Error(ErrorKind::label, "label '" + std::string(label) + "' is not in the class map");
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto& s : samples) counts.at(s.label) += 1;
  return counts;
}

Dataset make_dataset(std::span<const KeypointSequence> sequences, const LabelMap& labels) {
  Dataset d;
  d.num_classes = labels.size();
  d.samples.reserve(sequences.size());
  for (const auto& seq : sequences) {
    if (seq.frames.empty()) throw Error(ErrorKind::schema, seq.sample_id + " has no frames");
    d.samples.push_back({feature_matrix(seq), seq.frames.size(), labels.index_of(seq.label)});
  }
  return d;
}

void validate(const TrainConfig& config) {
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate))
    throw Error(ErrorKind::invalid_argument, "learning rate must be > 0");
  if (config.batch_size < 1) throw Error(ErrorKind::invalid_argument, "batch size must be >= 1");
  if (config.patience_epochs < 1)
    throw Error(ErrorKind::invalid_argument, "patience must be >= 1 epoch");
  if (config.max_epochs && *config.max_epochs < 1)
    throw Error(ErrorKind::invalid_argument, "max_epochs must be >= 1");
}

bool EarlyStopping::observe(std::size_t epoch, double loss) {
  improved_last_ = loss < best_loss_;
  if (improved_last_) {
    best_loss_ = loss;
    best_epoch_ = epoch;
  }
  return epoch - best_epoch_ >= patience_;
}

namespace {

struct BatchView {
  SequenceBatch batch;
  std::vector<std::size_t> targets;
};

BatchView gather(const Dataset& data, std::span<const std::size_t> indices, std::size_t width) {
  std::vector<std::span<const double>> seqs;
  std::vector<std::size_t> lengths;
  BatchView v;
  for (auto i : indices) {
    const Sample& s = data.samples[i];
    if (s.label >= data.num_classes)
      throw Error(ErrorKind::label, "sample label outside class map");
    seqs.emplace_back(s.frames);
    lengths.push_back(s.length);
    v.targets.push_back(s.label);
  }
  v.batch = make_batch(seqs, lengths, width);
  return v;
}

void check_compatible(const ModelParams& params, const Dataset& data) {
  if (data.num_classes != params.dims.num_classes)
    throw Error(ErrorKind::label, "dataset has " + std::to_string(data.num_classes) +
                                      " classes but the model outputs " +
                                      std::to_string(params.dims.num_classes));
  for (const auto& s : data.samples)
    if (s.label >= data.num_classes) throw Error(ErrorKind::label, "sample label outside class map");
}

}  // namespace

EvalResult evaluate(const ModelParams& params, const Dataset& data, std::size_t batch_size) {
  if (data.empty()) throw Error(ErrorKind::invalid_argument, "evaluation set is empty");
  if (batch_size < 1) throw Error(ErrorKind::invalid_argument, "batch size must be >= 1");
  check_compatible(params, data);
  EvalResult r;
  r.confusion = ConfusionMatrix(data.num_classes);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  double loss_sum = 0.0;
  const std::size_t K = params.dims.num_classes;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const auto idx = std::span<const std::size_t>(order).subspan(
        start, std::min(batch_size, order.size() - start));
    const BatchView v = gather(data, idx, params.dims.input);
    const ForwardCache cache = forward_batch(params, v.batch);
    loss_sum += cross_entropy_loss(cache, v.targets) * static_cast<double>(idx.size());
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const auto row = cache.logits_row(b);
      const auto pred = static_cast<std::size_t>(std::max_element(row.begin(), row.begin() + K) -
                                                 row.begin());
      r.confusion.add(v.targets[b], pred);
    }
  }
  r.loss = loss_sum / static_cast<double>(data.size());
  r.accuracy = accuracy(r.confusion);
  r.macro_f1 = macro_f1(r.confusion);
  return r;
}

TrainResult train(const ModelParams& initial, const Dataset& train_set, const TrainConfig& config,
                  const Dataset* eval_set, const EpochCallback& on_epoch) {
  validate(config);
  if (train_set.empty()) throw Error(ErrorKind::invalid_argument, "training set is empty");
  check_compatible(initial, train_set);
  if (eval_set) check_compatible(initial, *eval_set);
  if (config.monitor == Monitor::eval_loss && !eval_set)
    throw Error(ErrorKind::invalid_argument, "eval-loss monitoring needs an evaluation set");

  TrainResult result;
  result.config = config;
  ModelParams params = initial;
  params.revision = 0;
  result.best_params = params;
  AdamState opt = AdamState::for_params(params, config.learning_rate);
  EarlyStopping stopper(config.patience_epochs);
  Rng rng(config.seed);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1;; ++epoch) {
    if (config.shuffle) rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const auto idx = std::span<const std::size_t>(order).subspan(
          start, std::min(config.batch_size, order.size() - start));
      const BatchView v = gather(train_set, idx, params.dims.input);
      const ForwardCache cache = forward_batch(params, v.batch);
      loss_sum += cross_entropy_loss(cache, v.targets) * static_cast<double>(idx.size());
      const Gradients grads = backward(params, cache, v.targets);
      adam_step(params, grads, opt);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(train_set.size());
    if (eval_set) {
      const EvalResult ev = evaluate(params, *eval_set, config.batch_size);
      rec.eval_loss = ev.loss;
      rec.accuracy = ev.accuracy;
      rec.macro_f1 = ev.macro_f1;
      if (!result.best_accuracy || ev.accuracy > *result.best_accuracy) {
        result.best_accuracy = ev.accuracy;
        result.best_accuracy_epoch = epoch;
      }
      if (!result.best_macro_f1 || ev.macro_f1 > *result.best_macro_f1) {
        result.best_macro_f1 = ev.macro_f1;
        result.best_macro_f1_epoch = epoch;
      }
    }
    result.history.push_back(rec);

    const double monitored = config.monitor == Monitor::train_loss ? rec.loss : *rec.eval_loss;
    const bool patience_hit = stopper.observe(epoch, monitored);
    if (stopper.improved_last()) result.best_params = params;

    bool stop = false;
    if (patience_hit) {
      result.stop_reason = StopReason::patience;
      stop = true;
    } else if (config.max_epochs && epoch >= *config.max_epochs) {
      result.stop_reason = StopReason::max_epochs;
      stop = true;
    } else if (on_epoch && !on_epoch(rec, params)) {
      result.stop_reason = StopReason::callback;
      stop = true;
    }
    if (stop) {
      result.stopped_epoch = epoch;
      break;
    }
  }
  result.best_loss_epoch = stopper.best_epoch();
  result.best_loss = stopper.best_loss();
  result.best_params.revision = 0;
  return result;
}

std::string history_csv(const TrainResult& result) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,loss,accuracy,macro_f1\n";
  for (const auto& r : result.history) {
    out << r.epoch << ',' << r.loss << ',';
    if (r.accuracy) out << *r.accuracy;
    out << ',';
    if (r.macro_f1) out << *r.macro_f1;
    out << '\n';
  }
  return out.str();
}

std::string_view to_string(Monitor monitor) {
  return monitor == Monitor::train_loss ? "train_loss" : "eval_loss";
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::patience: return "patience";
    case StopReason::max_epochs: return "max_epochs";
    case StopReason::callback: return "callback";
  }
  return "patience";
}

std::string summary_json(const TrainResult& result) {
  using nlohmann::json;
  auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  json j = {{"best_loss_epoch", result.best_loss_epoch},
            {"best_loss", result.best_loss},
            {"best_accuracy_epoch", opt(result.best_accuracy_epoch)},
            {"best_accuracy", opt(result.best_accuracy)},
            {"best_macro_f1_epoch", opt(result.best_macro_f1_epoch)},
            {"best_macro_f1", opt(result.best_macro_f1)},
            {"stopped_epoch", result.stopped_epoch},
            {"stop_reason", to_string(result.stop_reason)},
            {"epochs_recorded", result.history.size()},
            {"config", result.config}};
  return j.dump(2) + "\n";
}

}  // namespace slr
