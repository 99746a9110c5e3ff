// SPDX-License-Identifier: Apache-2.0
// JSON mappings shared by checkpoints, run summaries and the CLI.
#pragma once

#include <json.hpp>

#include "slr/error.hpp"
#include "slr/training.hpp"

namespace slr {

inline void to_json(nlohmann::json& j, const Dims& d) {
  j = {{"input", d.input},
       {"mlp_hidden", d.mlp_hidden},
       {"gru_hidden", d.gru_hidden},
       {"num_classes", d.num_classes}};
}

inline void from_json(const nlohmann::json& j, Dims& d) {
  d.input = j.at("input").get<std::size_t>();
  d.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
  d.gru_hidden = j.at("gru_hidden").get<std::size_t>();
  d.num_classes = j.at("num_classes").get<std::size_t>();
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"learning_rate", c.learning_rate},
       {"batch_size", c.batch_size},
       {"patience_epochs", c.patience_epochs},
       {"max_epochs", c.max_epochs ? nlohmann::json(*c.max_epochs) : nlohmann::json(nullptr)},
       {"seed", c.seed},
       {"shuffle", c.shuffle},
       {"monitor", to_string(c.monitor)}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
  if (j.contains("patience_epochs")) c.patience_epochs = j.at("patience_epochs").get<std::size_t>();
  if (j.contains("max_epochs") && !j.at("max_epochs").is_null())
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("shuffle")) c.shuffle = j.at("shuffle").get<bool>();
  if (j.contains("monitor")) {
    const auto m = j.at("monitor").get<std::string>();
    if (m == "train_loss")
      c.monitor = Monitor::train_loss;
    else if (m == "eval_loss")
      c.monitor = Monitor::eval_loss;
    else
      throw Error(ErrorKind::schema, "unknown monitor '" + m + "'");
  }
}

}  // namespace slr
