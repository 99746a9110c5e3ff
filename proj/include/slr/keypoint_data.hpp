// SPDX-License-Identifier: Apache-2.0
//
// Keypoint sequences in the holistic46/1 layout, the KPSEQ file format,
// CSV manifests, the wrist-height frame filter, stratified splitting and a
// synthetic sign generator.
//
// holistic46/1 landmark order (x, y, z each, 138 values per frame):
//   0..3    pose: left shoulder, right shoulder, left wrist, right wrist
//   4..24   left hand landmarks 0..20
//   25..45  right hand landmarks 0..20
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slr/nn_core.hpp"

namespace slr {

inline constexpr std::size_t kLandmarkCount = 46;
inline constexpr std::size_t kHandLandmarks = 21;
inline constexpr std::size_t kPoseLeftShoulder = 0;
inline constexpr std::size_t kPoseRightShoulder = 1;
inline constexpr std::size_t kPoseLeftWrist = 2;
inline constexpr std::size_t kPoseRightWrist = 3;
inline constexpr std::size_t kLeftHandBegin = 4;
inline constexpr std::size_t kRightHandBegin = 25;
inline constexpr std::string_view kLandmarkLayout = "holistic46/1";
inline constexpr std::string_view kKpseqSchema = "kpseq/1";
static_assert(kLandmarkCount * 3 == kFrameWidth);

enum class Hand : std::size_t { left = 0, right = 1 };

/// First landmark index of a hand's 21-point block.
constexpr std::size_t hand_begin(Hand h) {
  return h == Hand::left ? kLeftHandBegin : kRightHandBegin;
}

struct LandmarkFrame {
  std::array<double, kFrameWidth> coords{};
  std::array<bool, 2> presence{};  // {left_hand_detected, right_hand_detected}

  double x(std::size_t landmark) const { return coords[3 * landmark]; }
  double y(std::size_t landmark) const { return coords[3 * landmark + 1]; }
  double z(std::size_t landmark) const { return coords[3 * landmark + 2]; }
  void set(std::size_t landmark, double x, double y, double z) {
    coords[3 * landmark] = x;
    coords[3 * landmark + 1] = y;
    coords[3 * landmark + 2] = z;
  }
  bool detected(std::size_t landmark) const;

  friend bool operator==(const LandmarkFrame&, const LandmarkFrame&) = default;
};

struct KeypointSequence {
  std::string sample_id;
  std::string dataset_id;
  std::string label;
  std::optional<std::string> concept_tag;
  double fps = 25.0;
  std::vector<LandmarkFrame> frames;

  friend bool operator==(const KeypointSequence&, const KeypointSequence&) = default;
};

/// Throws Error(schema | range | frame_width) on any invariant violation.
void validate(const KeypointSequence& seq);

/// Copy with every coordinate rounded to the nearest 32-bit float.
KeypointSequence quantized(const KeypointSequence& seq);

/// Row-major frames x 138 matrix of the coordinates.
std::vector<double> feature_matrix(const KeypointSequence& seq);

std::string write_kpseq(const KeypointSequence& seq);
void write_kpseq(const KeypointSequence& seq, const std::filesystem::path& destination);
KeypointSequence parse_kpseq(std::string_view content);
KeypointSequence read_kpseq(const std::filesystem::path& source);

/// True when min(y of pose left wrist, y of pose right wrist) < threshold.
bool frame_is_active(const LandmarkFrame& frame, double threshold = 0.6);

/// Keeps the active frames in order. Throws Error(empty_result) when no frame
/// survives.
KeypointSequence filter_frames(const KeypointSequence& seq, double threshold = 0.6);

enum class Split { train, test, unassigned };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct SampleRecord {
  std::string path;
  std::string label;
  std::optional<std::string> concept_tag;
  Split split = Split::unassigned;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct Manifest {
  std::vector<SampleRecord> rows;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Unique paths and non-empty labels.
void validate(const Manifest& manifest);

/// Every label present in the test split also occurs in train.
void check_test_labels_in_train(const Manifest& manifest);

std::string write_manifest_csv(const Manifest& manifest);
void write_manifest_csv(const Manifest& manifest, const std::filesystem::path& destination);
Manifest parse_manifest_csv(std::string_view content);
Manifest read_manifest_csv(const std::filesystem::path& source);

/// Per-class stratified assignment: round(n * train_fraction) rows of each
/// class go to train, clamped so both sides get at least one row.
Manifest split_manifest(const Manifest& manifest, double train_fraction, std::uint64_t seed);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct SynthSpec {
  std::string dataset_id = "synth";
  std::size_t num_classes = 5;
  std::size_t samples_per_class = 20;
  std::size_t frames_min = 8;
  std::size_t frames_max = 16;
  std::map<std::string, Point2> concept_anchors;
  std::vector<std::string> class_to_concept;
  std::vector<std::string> labels;  // optional; defaults to class_00, class_01, ...
  double jitter_stddev = 0.01;
  std::uint64_t seed = 0;
  std::size_t rest_frames = 0;  // hands-down frames added before and after the sign
  double fps = 25.0;
};

/// Throws Error(invalid_argument | range) for an unusable spec.
void validate(const SynthSpec& spec);

/// Label of class `index` under `spec`.
std::string class_label(const SynthSpec& spec, std::size_t index);

struct SynthDataset {
  std::vector<KeypointSequence> sequences;
  Manifest manifest;  // one unassigned row per sequence, path "<sample_id>.kpseq.json"
};

SynthDataset synth_generate(const SynthSpec& spec);

/// Writes every sequence plus manifest.csv into `directory`.
void write_dataset(const SynthDataset& data, const std::filesystem::path& directory);

}  // namespace slr
