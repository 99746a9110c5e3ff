// SPDX-License-Identifier: Apache-2.0
//
// Checkpoints and weight-initialisation transfer.
//
// Checkpoint layout (all integers little-endian):
//   bytes 0..3    "SLRM"
//   bytes 4..7    u32 format version (1)
//   bytes 8..11   u32 metadata length L
//   bytes 12..    L bytes of UTF-8 JSON metadata (dims, label map, layout,
//                 provenance, ordered tensor directory)
//   remainder     IEEE-754 binary32 values, row-major, directory order
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slr/training.hpp"

namespace slr {

inline constexpr std::string_view kCheckpointMagic = "SLRM";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorEntry {
  std::string name;
  std::vector<std::size_t> shape;

  std::size_t element_count() const;
  friend bool operator==(const TensorEntry&, const TensorEntry&) = default;
};

/// Ordered tensor directory for a model of `dims`.
std::vector<TensorEntry> tensor_directory(const Dims& dims);

struct Provenance {
  std::optional<TrainConfig> config;
  std::string dataset_id;
  std::optional<std::size_t> best_epoch;
  std::optional<std::size_t> stopped_epoch;
  std::map<std::string, double> metrics;
  std::optional<std::string> initialized_from;  // source checkpoint, when transferred

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Checkpoint {
  Model model;
  std::string landmark_layout = "holistic46/1";
  Provenance provenance;
};

/// Serialized bytes; tensors are rounded to binary32.
std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& destination);
Checkpoint load_checkpoint(const std::filesystem::path& source);

enum class TransferScope { mlp_only, mlp_and_gru };

std::string_view to_string(TransferScope scope);
TransferScope parse_transfer_scope(std::string_view text);

/// Fresh init_params(target_dims, seed) with the source's MLP tensors (and
/// GRU tensors for mlp_and_gru) copied in. The classifier head is never
/// transferred.
Model init_from_source(const Checkpoint& source, const Dims& target_dims,
                       const LabelMap& target_labels, TransferScope scope, std::uint64_t seed);

/// (tl - baseline) / baseline * 100, rounded to two decimals.
double relative_improvement(double baseline_pct, double tl_pct);

}  // namespace slr
