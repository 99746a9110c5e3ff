// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>

#include "slr/error.hpp"
#include "slr/keypoint_data.hpp"
#include "slr/rng.hpp"

using namespace slr;
namespace fs = std::filesystem;

namespace {

SynthSpec small_spec(std::uint64_t seed = 1) {
  SynthSpec s;
  s.num_classes = 3;
  s.samples_per_class = 4;
  s.frames_min = 3;
  s.frames_max = 6;
  s.concept_anchors = {{"head", {0.5, 0.2}}, {"chest", {0.5, 0.5}}};
  s.class_to_concept = {"head", "chest", "head"};
  s.seed = seed;
  return s;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::invalid_argument;
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

// Frame whose wrists sit at the given heights; hands absent.
LandmarkFrame wrist_frame(double left_y, double right_y) {
  LandmarkFrame f;
  f.set(kPoseLeftShoulder, 0.35, 0.3, 0.0);
  f.set(kPoseRightShoulder, 0.65, 0.3, 0.0);
  f.set(kPoseLeftWrist, 0.4, left_y, 0.0);
  f.set(kPoseRightWrist, 0.6, right_y, 0.0);
  return f;
}

}  // namespace

TEST_SUITE("keypoint_data") {

TEST_CASE("synthetic sequences are valid holistic46 frames") {
  const SynthDataset d = synth_generate(small_spec());
  REQUIRE(d.sequences.size() == 12);
  REQUIRE(d.manifest.rows.size() == 12);
  for (const auto& s : d.sequences) {
    CHECK_NOTHROW(validate(s));
    CHECK(s.frames.size() >= 3);
    CHECK(s.frames.size() <= 6);
    CHECK(feature_matrix(s).size() == s.frames.size() * kFrameWidth);
  }
  CHECK(d.manifest.rows[0].path == d.sequences[0].sample_id + ".kpseq.json");
  CHECK(d.manifest.rows[5].concept_tag == "chest");
}

TEST_CASE("synthesis is seeded") {
  CHECK(synth_generate(small_spec(4)).sequences == synth_generate(small_spec(4)).sequences);
  CHECK_FALSE(synth_generate(small_spec(4)).sequences == synth_generate(small_spec(5)).sequences);
}

TEST_CASE("synthesis rejects unusable specs") {
  SynthSpec s = small_spec();
  s.class_to_concept[1] = "nowhere";
  CHECK(kind_of([&] { synth_generate(s); }) == ErrorKind::invalid_argument);
  s = small_spec();
  s.concept_anchors["head"] = {1.5, 0.2};
  CHECK(kind_of([&] { synth_generate(s); }) == ErrorKind::range);
  s = small_spec();
  s.frames_min = 7;
  CHECK(kind_of([&] { synth_generate(s); }) == ErrorKind::invalid_argument);
}

TEST_CASE("KPSEQ round trip is bit exact after float32 quantization") {
  const SynthDataset d = synth_generate(small_spec());
  for (const auto& raw : d.sequences) {
    const KeypointSequence q = quantized(raw);
    const std::string text = write_kpseq(raw);
    const KeypointSequence back = parse_kpseq(text);
    CHECK(back == q);
    CHECK(write_kpseq(back) == text);
    for (std::size_t f = 0; f < q.frames.size(); ++f)
      for (std::size_t i = 0; i < kFrameWidth; ++i)
        CHECK(std::bit_cast<std::uint64_t>(back.frames[f].coords[i]) ==
              std::bit_cast<std::uint64_t>(q.frames[f].coords[i]));
  }
}

TEST_CASE("KPSEQ keeps null concept and presence flags") {
  KeypointSequence s;
  s.sample_id = "a";
  s.label = "b";
  s.frames.push_back(wrist_frame(0.5, 0.9));
  s.frames[0].presence = {false, true};
  for (std::size_t k = 0; k < kHandLandmarks; ++k) s.frames[0].set(kRightHandBegin + k, 0.5, 0.5, 0.1);
  const KeypointSequence back = parse_kpseq(write_kpseq(s));
  CHECK_FALSE(back.concept_tag.has_value());
  CHECK(back.frames[0].presence == std::array<bool, 2>{false, true});
  CHECK(back == quantized(s));
}

TEST_CASE("KPSEQ parse errors") {
  const std::string good = write_kpseq(synth_generate(small_spec()).sequences[0]);
  CHECK(kind_of([&] { parse_kpseq("{not json"); }) == ErrorKind::format);
  CHECK(kind_of([&] { parse_kpseq(replace_once(good, "kpseq/1", "kpseq/2")); }) == ErrorKind::schema);
  CHECK(kind_of([&] { parse_kpseq(replace_once(good, "holistic46/1", "pose33")); }) ==
        ErrorKind::schema);
  CHECK(kind_of([&] { parse_kpseq(replace_once(good, "\"label\"", "\"lab\"")); }) == ErrorKind::schema);
  // drop the first coordinate of the first frame
  const auto start = good.find("\n[") + 2;
  const auto comma = good.find(',', start);
  std::string narrow = good;
  narrow.erase(start, comma - start + 1);
  CHECK(kind_of([&] { parse_kpseq(narrow); }) == ErrorKind::frame_width);
  std::string outside = good;
  outside.replace(start, comma - start, "1.5");
  CHECK(kind_of([&] { parse_kpseq(outside); }) == ErrorKind::range);
}

TEST_CASE("undetected hands must be zero filled") {
  KeypointSequence s;
  s.sample_id = "a";
  s.label = "b";
  s.frames.push_back(wrist_frame(0.5, 0.5));
  s.frames[0].set(kLeftHandBegin + 3, 0.2, 0.2, 0.0);
  CHECK(kind_of([&] { validate(s); }) == ErrorKind::range);
  s.frames[0].presence[0] = true;
  for (std::size_t k = 0; k < kHandLandmarks; ++k) s.frames[0].set(kLeftHandBegin + k, 0.2, 0.2, 0.0);
  CHECK_NOTHROW(validate(s));
}

TEST_CASE("frame filter keeps exactly the frames with a wrist above the threshold") {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    KeypointSequence s;
    s.sample_id = "p";
    s.label = "l";
    const std::size_t n = 1 + rng.below(30);
    for (std::size_t i = 0; i < n; ++i) {
      // values on a 0.05 lattice so the boundary 0.6 is hit regularly
      const double ly = 0.05 * static_cast<double>(rng.below(21));
      const double ry = 0.05 * static_cast<double>(rng.below(21));
      s.frames.push_back(wrist_frame(ly, ry));
    }
    s.frames.push_back(wrist_frame(0.1, 0.9));  // guarantees a survivor
    const KeypointSequence kept = filter_frames(s, 0.6);
    std::size_t j = 0;
    for (const auto& f : s.frames) {
      const bool active = std::min(f.y(kPoseLeftWrist), f.y(kPoseRightWrist)) < 0.6;
      CHECK(frame_is_active(f, 0.6) == active);
      if (active) {
        REQUIRE(j < kept.frames.size());
        CHECK(kept.frames[j++] == f);
      }
    }
    CHECK(j == kept.frames.size());
    for (const auto& f : kept.frames) CHECK(std::min(f.y(kPoseLeftWrist), f.y(kPoseRightWrist)) < 0.6);
  }
}

TEST_CASE("filter boundary and empty result") {
  CHECK_FALSE(frame_is_active(wrist_frame(0.6, 0.6)));
  CHECK(frame_is_active(wrist_frame(0.6, std::nextafter(0.6, 0.0))));
  KeypointSequence rest;
  rest.sample_id = "r";
  rest.label = "l";
  rest.frames = {wrist_frame(0.9, 0.95), wrist_frame(0.7, 0.61)};
  CHECK(kind_of([&] { filter_frames(rest); }) == ErrorKind::empty_result);
  CHECK(kind_of([&] { filter_frames(rest, 0.0); }) == ErrorKind::invalid_argument);
}

TEST_CASE("rest frames are dropped by the filter") {
  SynthSpec spec = small_spec();
  spec.rest_frames = 3;
  spec.concept_anchors = {{"head", {0.5, 0.25}}, {"chest", {0.5, 0.4}}};
  for (const auto& s : synth_generate(spec).sequences) {
    const KeypointSequence kept = filter_frames(s);
    CHECK(kept.frames.size() == s.frames.size() - 6);
  }
}

TEST_CASE("manifest CSV round trip with quoting") {
  Manifest m;
  m.rows = {{"a.kpseq.json", "hello", "food", Split::train},
            {"dir/b,c.kpseq.json", "say \"hi\"", std::nullopt, Split::test},
            {"c.kpseq.json", "x", "", Split::unassigned}};
  const std::string text = write_manifest_csv(m);
  CHECK(text.rfind("path,label,concept,split\n", 0) == 0);
  CHECK(text.find("\"dir/b,c.kpseq.json\",\"say \"\"hi\"\"\"") != std::string::npos);
  const Manifest back = parse_manifest_csv(text);
  CHECK(back.rows[0] == m.rows[0]);
  CHECK(back.rows[1] == m.rows[1]);
  CHECK(write_manifest_csv(back) == text);
}

TEST_CASE("manifest validation") {
  CHECK(kind_of([] { parse_manifest_csv("file,label,concept,split\n"); }) == ErrorKind::schema);
  CHECK(kind_of([] { parse_manifest_csv("path,label,concept,split\na,b,,train\na,c,,test\n"); }) ==
        ErrorKind::schema);
  CHECK(kind_of([] { parse_manifest_csv("path,label,concept,split\na,b,,later\n"); }) ==
        ErrorKind::schema);
  CHECK(kind_of([] { parse_manifest_csv("path,label,concept,split\n\"a,b,,train\n"); }) ==
        ErrorKind::format);
  const Manifest m = parse_manifest_csv("path,label,concept,split\na,x,,train\nb,y,,test\n");
  CHECK(kind_of([&] { check_test_labels_in_train(m); }) == ErrorKind::label);
}

TEST_CASE("stratified split: per-class counts and determinism") {
  SynthSpec spec = small_spec();
  spec.num_classes = 5;
  spec.samples_per_class = 20;
  spec.class_to_concept.assign(5, "head");
  const Manifest all = synth_generate(spec).manifest;
  const Manifest a = split_manifest(all, 0.8, 3);
  CHECK(a == split_manifest(all, 0.8, 3));
  CHECK_FALSE(a == split_manifest(all, 0.8, 4));
  std::map<std::string, int> train_per_class;
  int train = 0;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].path == all.rows[i].path);
    CHECK(a.rows[i].split != Split::unassigned);
    if (a.rows[i].split == Split::train) {
      ++train;
      ++train_per_class[a.rows[i].label];
    }
  }
  CHECK(train == 80);
  for (const auto& [label, n] : train_per_class) CHECK(n == 16);
  CHECK_NOTHROW(check_test_labels_in_train(a));
}

TEST_CASE("split keeps both sides non-empty for tiny classes") {
  Manifest m = parse_manifest_csv(
      "path,label,concept,split\na,x,,unassigned\nb,x,,unassigned\nc,y,,unassigned\n"
      "d,y,,unassigned\ne,y,,unassigned\n");
  for (double f : {0.01, 0.5, 0.99}) {
    const Manifest s = split_manifest(m, f, 1);
    std::map<std::string, std::pair<int, int>> counts;
    for (const auto& r : s.rows)
      (r.split == Split::train ? counts[r.label].first : counts[r.label].second)++;
    for (const auto& [label, c] : counts) {
      CHECK(c.first >= 1);
      CHECK(c.second >= 1);
    }
  }
  CHECK(kind_of([&] { split_manifest(m, 1.0, 1); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([&] { split_manifest(split_manifest(m, 0.5, 1), 0.5, 1); }) ==
        ErrorKind::invalid_argument);
}

TEST_CASE("dataset files on disk") {
  const fs::path dir = fs::temp_directory_path() / "slr_test_keypoint_data";
  fs::remove_all(dir);
  const SynthDataset d = synth_generate(small_spec());
  write_dataset(d, dir);
  const Manifest m = read_manifest_csv(dir / "manifest.csv");
  CHECK(m == d.manifest);
  CHECK(read_kpseq(dir / m.rows[2].path) == quantized(d.sequences[2]));
  CHECK(kind_of([&] { read_kpseq(dir / "missing.kpseq.json"); }) == ErrorKind::io);
  fs::remove_all(dir);
}

}
