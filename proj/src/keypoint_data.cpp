// SPDX-License-Identifier: Apache-2.0
#include "slr/keypoint_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "slr/error.hpp"
#include "slr/rng.hpp"

namespace slr {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

std::size_t hand_of(std::size_t landmark) {
  return landmark >= kRightHandBegin ? 1 : 0;
}

void append_float(std::string& out, float v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, end);
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, end);
}

}  // namespace

bool LandmarkFrame::detected(std::size_t landmark) const {
  if (landmark < kLeftHandBegin) return true;
  return presence[hand_of(landmark)];
}

void validate(const KeypointSequence& seq) {
  if (seq.sample_id.empty()) throw Error(ErrorKind::schema, "sample_id is empty");
  if (seq.label.empty()) throw Error(ErrorKind::schema, "label is empty in " + seq.sample_id);
  if (!(seq.fps > 0.0) || !std::isfinite(seq.fps))
    throw Error(ErrorKind::schema, "fps must be positive in " + seq.sample_id);
  if (seq.frames.empty()) throw Error(ErrorKind::schema, seq.sample_id + " has no frames");
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    const LandmarkFrame& frame = seq.frames[f];
    for (std::size_t lm = 0; lm < kLandmarkCount; ++lm) {
      const double x = frame.x(lm), y = frame.y(lm), z = frame.z(lm);
      if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
        throw Error(ErrorKind::range, seq.sample_id + ": non-finite coordinate in frame " +
                                          std::to_string(f));
      if (frame.detected(lm)) {
        if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0)
          throw Error(ErrorKind::range, seq.sample_id + ": landmark " + std::to_string(lm) +
                                            " of frame " + std::to_string(f) +
                                            " outside [0,1]");
      } else if (x != 0.0 || y != 0.0 || z != 0.0) {
        throw Error(ErrorKind::range, seq.sample_id + ": undetected hand landmark " +
                                          std::to_string(lm) + " of frame " +
                                          std::to_string(f) + " is not zero");
      }
    }
  }
}

KeypointSequence quantized(const KeypointSequence& seq) {
  KeypointSequence out = seq;
  for (auto& frame : out.frames)
    for (double& v : frame.coords) v = static_cast<double>(static_cast<float>(v));
  return out;
}

std::vector<double> feature_matrix(const KeypointSequence& seq) {
  std::vector<double> out;
  out.reserve(seq.frames.size() * kFrameWidth);
  for (const auto& frame : seq.frames) out.insert(out.end(), frame.coords.begin(), frame.coords.end());
  return out;
}

std::string write_kpseq(const KeypointSequence& seq) {
  validate(seq);
  std::string out;
  out.reserve(seq.frames.size() * kFrameWidth * 10 + 512);
  out += "{\"schema\":";
  out += json(kKpseqSchema).dump();
  out += ",\"sample_id\":" + json(seq.sample_id).dump();
  out += ",\"dataset_id\":" + json(seq.dataset_id).dump();
  out += ",\"label\":" + json(seq.label).dump();
  out += ",\"concept\":" + (seq.concept_tag ? json(*seq.concept_tag).dump() : "null");
  out += ",\"fps\":";
  append_double(out, seq.fps);
  out += ",\"landmark_layout\":";
  out += json(kLandmarkLayout).dump();
  out += ",\n\"presence\":[";
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    if (f) out += ',';
    out += seq.frames[f].presence[0] ? "[true," : "[false,";
    out += seq.frames[f].presence[1] ? "true]" : "false]";
  }
  out += "],\n\"frames\":[";
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    out += f ? ",\n[" : "\n[";
    const auto& coords = seq.frames[f].coords;
    for (std::size_t i = 0; i < coords.size(); ++i) {
      if (i) out += ',';
      append_float(out, static_cast<float>(coords[i]));
    }
    out += ']';
  }
  out += "]}\n";
  return out;
}

void write_kpseq(const KeypointSequence& seq, const std::filesystem::path& destination) {
  write_file(destination, write_kpseq(seq));
}

KeypointSequence parse_kpseq(std::string_view content) {
  json doc;
  try {
    doc = json::parse(content);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::format, std::string("malformed KPSEQ JSON: ") + e.what());
  }
  auto field = [&](const char* key) -> const json& {
    if (!doc.is_object() || !doc.contains(key))
      throw Error(ErrorKind::schema, std::string("KPSEQ missing field '") + key + "'");
    return doc.at(key);
  };
  auto string_field = [&](const char* key) {
    const json& v = field(key);
    if (!v.is_string())
      throw Error(ErrorKind::schema, std::string("KPSEQ field '") + key + "' is not a string");
    return v.get<std::string>();
  };

  if (string_field("schema") != kKpseqSchema)
    throw Error(ErrorKind::schema, "unsupported KPSEQ schema '" + doc["schema"].get<std::string>() + "'");
  if (string_field("landmark_layout") != kLandmarkLayout)
    throw Error(ErrorKind::schema, "unsupported landmark layout '" +
                                       doc["landmark_layout"].get<std::string>() + "'");

  KeypointSequence seq;
  seq.sample_id = string_field("sample_id");
  seq.dataset_id = string_field("dataset_id");
  seq.label = string_field("label");
  const json& concept_field = field("concept");
  if (concept_field.is_string())
    seq.concept_tag = concept_field.get<std::string>();
  else if (!concept_field.is_null())
    throw Error(ErrorKind::schema, "KPSEQ field 'concept' must be a string or null");
  if (!field("fps").is_number()) throw Error(ErrorKind::schema, "KPSEQ field 'fps' is not a number");
  seq.fps = doc["fps"].get<double>();

  const json& presence = field("presence");
  const json& frames = field("frames");
  if (!presence.is_array() || !frames.is_array())
    throw Error(ErrorKind::schema, "KPSEQ presence/frames must be arrays");
  if (presence.size() != frames.size())
    throw Error(ErrorKind::schema, "KPSEQ presence and frames differ in length");

  seq.frames.resize(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const json& row = frames[f];
    if (!row.is_array())
      throw Error(ErrorKind::schema, "KPSEQ frame " + std::to_string(f) + " is not an array");
    if (row.size() != kFrameWidth)
      throw Error(ErrorKind::frame_width, "KPSEQ frame " + std::to_string(f) + " has " +
                                              std::to_string(row.size()) + " values, expected " +
                                              std::to_string(kFrameWidth));
    const json& flags = presence[f];
    if (!flags.is_array() || flags.size() != 2 || !flags[0].is_boolean() || !flags[1].is_boolean())
      throw Error(ErrorKind::schema, "KPSEQ presence entry " + std::to_string(f) +
                                         " must be [bool,bool]");
    LandmarkFrame& frame = seq.frames[f];
    frame.presence = {flags[0].get<bool>(), flags[1].get<bool>()};
    for (std::size_t i = 0; i < kFrameWidth; ++i) {
      if (!row[i].is_number())
        throw Error(ErrorKind::schema, "KPSEQ frame " + std::to_string(f) + " has a non-number");
      frame.coords[i] = static_cast<double>(static_cast<float>(row[i].get<double>()));
    }
  }
  validate(seq);
  return seq;
}

KeypointSequence read_kpseq(const std::filesystem::path& source) {
  try {
    return parse_kpseq(read_file(source));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io) throw;
    throw Error(e.kind(), source.string() + ": " + e.what());
  }
}

bool frame_is_active(const LandmarkFrame& frame, double threshold) {
  return std::min(frame.y(kPoseLeftWrist), frame.y(kPoseRightWrist)) < threshold;
}

KeypointSequence filter_frames(const KeypointSequence& seq, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw Error(ErrorKind::invalid_argument, "filter threshold must lie in (0, 1]");
  KeypointSequence out = seq;
  out.frames.clear();
  std::copy_if(seq.frames.begin(), seq.frames.end(), std::back_inserter(out.frames),
               [&](const LandmarkFrame& f) { return frame_is_active(f, threshold); });
  if (out.frames.empty())
    throw Error(ErrorKind::empty_result,
                "no frame of sample '" + seq.sample_id + "' has a wrist above the threshold");
  return out;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
  }
  return "unassigned";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  if (text == "unassigned") return Split::unassigned;
  throw Error(ErrorKind::schema, "invalid split value '" + std::string(text) + "'");
}

void validate(const Manifest& manifest) {
  std::set<std::string_view> seen;
  for (const auto& row : manifest.rows) {
    if (row.path.empty()) throw Error(ErrorKind::schema, "manifest row with empty path");
    if (row.label.empty()) throw Error(ErrorKind::schema, "manifest row " + row.path + " has no label");
    if (!seen.insert(row.path).second)
      throw Error(ErrorKind::schema, "duplicate manifest path " + row.path);
  }
}

void check_test_labels_in_train(const Manifest& manifest) {
  std::set<std::string_view> train;
  for (const auto& row : manifest.rows)
    if (row.split == Split::train) train.insert(row.label);
  for (const auto& row : manifest.rows)
    if (row.split == Split::test && !train.contains(row.label))
      throw Error(ErrorKind::label, "test label '" + row.label + "' does not occur in train");
}

namespace {

void append_csv_field(std::string& out, std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
    out += field;
    return;
  }
  out += '"';
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (ch == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (ch == '\n') {
      record.push_back(std::move(field));
      records.push_back(std::move(record));
      record.clear();
      field.clear();
      field_started = false;
    } else if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      // tolerated, LF terminates the record
    } else {
      field += ch;
      field_started = true;
    }
  }
  if (quoted) throw Error(ErrorKind::format, "unterminated quoted CSV field");
  if (field_started || !record.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace

std::string write_manifest_csv(const Manifest& manifest) {
  validate(manifest);
  std::string out = "path,label,concept,split\n";
  for (const auto& row : manifest.rows) {
    append_csv_field(out, row.path);
    out += ',';
    append_csv_field(out, row.label);
    out += ',';
    if (row.concept_tag) append_csv_field(out, *row.concept_tag);
    out += ',';
    out += to_string(row.split);
    out += '\n';
  }
  return out;
}

void write_manifest_csv(const Manifest& manifest, const std::filesystem::path& destination) {
  write_file(destination, write_manifest_csv(manifest));
}

Manifest parse_manifest_csv(std::string_view content) {
  const auto records = parse_csv(content);
  const std::vector<std::string> header{"path", "label", "concept", "split"};
  if (records.empty() || records.front() != header)
    throw Error(ErrorKind::schema, "manifest header must be exactly 'path,label,concept,split'");
  Manifest m;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.size() != 4)
      throw Error(ErrorKind::schema, "manifest line " + std::to_string(i + 1) + " has " +
                                         std::to_string(r.size()) + " fields");
    SampleRecord row{r[0], r[1], std::nullopt, parse_split(r[3])};
    if (!r[2].empty()) row.concept_tag = r[2];
    m.rows.push_back(std::move(row));
  }
  validate(m);
  return m;
}

Manifest read_manifest_csv(const std::filesystem::path& source) {
  return parse_manifest_csv(read_file(source));
}

Manifest split_manifest(const Manifest& manifest, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorKind::invalid_argument, "train fraction must lie in (0, 1)");
  validate(manifest);
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    const auto& row = manifest.rows[i];
    if (row.split != Split::unassigned)
      throw Error(ErrorKind::invalid_argument, "manifest row " + row.path + " is already assigned");
    auto [it, fresh] = by_label.try_emplace(row.label);
    if (fresh) order.push_back(row.label);
    it->second.push_back(i);
  }

  Manifest out = manifest;
  Rng rng(seed);
  for (const auto& label : order) {
    auto& rows = by_label[label];
    const std::size_t n = rows.size();
    if (n < 2)
      throw Error(ErrorKind::invalid_argument,
                  "class '" + label + "' has a single sample and cannot be stratified");
    rng.shuffle(std::span<std::size_t>(rows));
    auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    for (std::size_t j = 0; j < n; ++j)
      out.rows[rows[j]].split = j < n_train ? Split::train : Split::test;
  }
  return out;
}

void validate(const SynthSpec& spec) {
  if (spec.num_classes < 2) throw Error(ErrorKind::invalid_argument, "num_classes must be >= 2");
  if (spec.samples_per_class < 2)
    throw Error(ErrorKind::invalid_argument, "samples_per_class must be >= 2");
  if (spec.frames_min < 1 || spec.frames_max < spec.frames_min)
    throw Error(ErrorKind::invalid_argument, "frames range must satisfy 1 <= min <= max");
  if (!(spec.jitter_stddev >= 0.0) || !std::isfinite(spec.jitter_stddev))
    throw Error(ErrorKind::invalid_argument, "jitter_stddev must be >= 0");
  if (!(spec.fps > 0.0)) throw Error(ErrorKind::invalid_argument, "fps must be positive");
  if (spec.class_to_concept.size() != spec.num_classes)
    throw Error(ErrorKind::invalid_argument, "class_to_concept must name a concept for every class");
  if (!spec.labels.empty() && spec.labels.size() != spec.num_classes)
    throw Error(ErrorKind::invalid_argument, "labels must be empty or one per class");
  for (const auto& c : spec.class_to_concept)
    if (!spec.concept_anchors.contains(c))
      throw Error(ErrorKind::invalid_argument, "class mapped to undefined concept '" + c + "'");
  for (const auto& [name, p] : spec.concept_anchors)
    if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0))
      throw Error(ErrorKind::range, "anchor of concept '" + name + "' lies outside [0,1]^2");
}

std::string class_label(const SynthSpec& spec, std::size_t index) {
  if (!spec.labels.empty()) return spec.labels.at(index);
  char buf[32];
  std::snprintf(buf, sizeof buf, "class_%02zu", index);
  return buf;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kHandOffsetX = 0.04;
constexpr double kDepth = 0.05;

struct Sinusoid {
  double amplitude;
  double frequency;
  double phase;
};

struct HandPrototype {
  std::array<std::array<Sinusoid, 3>, 2> path;  // per coordinate (x, y)
  std::array<Point2, kHandLandmarks> shape;      // offsets from the wrist
  Point2 center;
};

struct ClassPrototype {
  std::array<HandPrototype, 2> hands;
};

ClassPrototype make_prototype(Point2 anchor, Rng& rng) {
  ClassPrototype proto;
  for (std::size_t h = 0; h < 2; ++h) {
    HandPrototype& hand = proto.hands[h];
    hand.center = {anchor.x + (h == 0 ? -kHandOffsetX : kHandOffsetX), anchor.y};
    for (auto& coord : hand.path)
      for (auto& s : coord)
        s = {rng.uniform(0.005, 0.025), static_cast<double>(1 + rng.below(3)),
             rng.uniform(0.0, kTwoPi)};
    hand.shape[0] = {0.0, 0.0};
    for (std::size_t k = 1; k < kHandLandmarks; ++k)
      hand.shape[k] = {rng.uniform(-0.03, 0.03), rng.uniform(-0.06, 0.0)};
  }
  return proto;
}

double path_value(const std::array<Sinusoid, 3>& path, double tau) {
  double v = 0.0;
  for (const auto& s : path) v += s.amplitude * std::sin(kTwoPi * s.frequency * tau + s.phase);
  return v;
}

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

LandmarkFrame rest_frame(Rng& rng, double jitter) {
  LandmarkFrame f;
  f.set(kPoseLeftShoulder, clamp_unit(0.35 + jitter * rng.normal()),
        clamp_unit(0.3 + jitter * rng.normal()), kDepth);
  f.set(kPoseRightShoulder, clamp_unit(0.65 + jitter * rng.normal()),
        clamp_unit(0.3 + jitter * rng.normal()), kDepth);
  f.set(kPoseLeftWrist, clamp_unit(0.3 + jitter * rng.normal()), 0.95, kDepth);
  f.set(kPoseRightWrist, clamp_unit(0.7 + jitter * rng.normal()), 0.95, kDepth);
  return f;
}

}  // namespace

SynthDataset synth_generate(const SynthSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  std::vector<ClassPrototype> protos;
  protos.reserve(spec.num_classes);
  for (std::size_t c = 0; c < spec.num_classes; ++c)
    protos.push_back(make_prototype(spec.concept_anchors.at(spec.class_to_concept[c]), rng));

  SynthDataset out;
  const double sd = spec.jitter_stddev;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    const std::string label = class_label(spec, c);
    const std::string& concept_name = spec.class_to_concept[c];
    for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
      KeypointSequence seq;
      char idx[16];
      std::snprintf(idx, sizeof idx, "%03zu", s);
      seq.sample_id = spec.dataset_id + "_" + label + "_" + idx;
      seq.dataset_id = spec.dataset_id;
      seq.label = label;
      seq.concept_tag = concept_name;
      seq.fps = spec.fps;

      const std::size_t span = spec.frames_max - spec.frames_min + 1;
      const std::size_t length = spec.frames_min + static_cast<std::size_t>(rng.below(span));

      for (std::size_t r = 0; r < spec.rest_frames; ++r) seq.frames.push_back(rest_frame(rng, sd));
      for (std::size_t t = 0; t < length; ++t) {
        const double tau = static_cast<double>(t) / static_cast<double>(length);
        LandmarkFrame f;
        f.presence = {true, true};
        f.set(kPoseLeftShoulder, clamp_unit(0.35 + sd * rng.normal()),
              clamp_unit(0.3 + sd * rng.normal()), kDepth);
        f.set(kPoseRightShoulder, clamp_unit(0.65 + sd * rng.normal()),
              clamp_unit(0.3 + sd * rng.normal()), kDepth);
        for (std::size_t h = 0; h < 2; ++h) {
          const HandPrototype& hand = protos[c].hands[h];
          const double wx = hand.center.x + path_value(hand.path[0], tau);
          const double wy = hand.center.y + path_value(hand.path[1], tau);
          const std::size_t base = hand_begin(h == 0 ? Hand::left : Hand::right);
          for (std::size_t k = 0; k < kHandLandmarks; ++k)
            f.set(base + k, clamp_unit(wx + hand.shape[k].x + sd * rng.normal()),
                  clamp_unit(wy + hand.shape[k].y + sd * rng.normal()), kDepth);
          f.set(h == 0 ? kPoseLeftWrist : kPoseRightWrist, f.x(base), f.y(base), kDepth);
        }
        seq.frames.push_back(f);
      }
      for (std::size_t r = 0; r < spec.rest_frames; ++r) seq.frames.push_back(rest_frame(rng, sd));

      out.manifest.rows.push_back(
          {seq.sample_id + ".kpseq.json", label, concept_name, Split::unassigned});
      out.sequences.push_back(std::move(seq));
    }
  }
  return out;
}

void write_dataset(const SynthDataset& data, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + directory.string());
  for (std::size_t i = 0; i < data.sequences.size(); ++i)
    write_kpseq(data.sequences[i], directory / data.manifest.rows.at(i).path);
  write_manifest_csv(data.manifest, directory / "manifest.csv");
}

}  // namespace slr
