// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "slr/keypoint_data.hpp"
#include "slr/training.hpp"

namespace slr::fixture {

/// One concept per class, anchors spread along a horizontal line.
inline SynthSpec distinct_spec(std::size_t classes, std::size_t per_class, std::uint64_t seed) {
  SynthSpec s;
  s.num_classes = classes;
  s.samples_per_class = per_class;
  s.frames_min = 4;
  s.frames_max = 8;
  s.seed = seed;
  for (std::size_t c = 0; c < classes; ++c) {
    char name[16];
    std::snprintf(name, sizeof name, "c%02zu", c);
    const double x = 0.2 + 0.6 * static_cast<double>(c) / static_cast<double>(classes > 1 ? classes - 1 : 1);
    s.concept_anchors[name] = {x, 0.2 + 0.1 * static_cast<double>(c % 3)};
    s.class_to_concept.push_back(name);
  }
  return s;
}

inline Dataset dataset_of(const SynthDataset& d) {
  return make_dataset(d.sequences, LabelMap::from_manifest(d.manifest));
}

}  // namespace slr::fixture
