// SPDX-License-Identifier: Apache-2.0
//
// Hand-activity density maps per concept and their pairwise similarity.
// Cell (row, col) covers y in [row/G, (row+1)/G) and x in [col/G, (col+1)/G).
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slr/keypoint_data.hpp"

namespace slr {

enum class LandmarkSelector {
  wrists,     // hand landmark 0 of each detected hand
  all_hands,  // all 21 landmarks of each detected hand
};

std::string_view to_string(LandmarkSelector selector);
LandmarkSelector parse_landmark_selector(std::string_view text);

struct ActivityGrid {
  std::size_t size = 64;
  std::vector<double> cells;  // size x size, row-major
  std::uint64_t count = 0;    // landmarks accumulated
  std::string concept_tag;
  std::string dataset_id;

  double at(std::size_t row, std::size_t col) const { return cells[row * size + col]; }
  double total() const;

  ActivityGrid& operator+=(const ActivityGrid& other);
};

ActivityGrid empty_grid(std::size_t size);

/// Histogram of the selected landmarks of every sequence whose concept equals
/// `concept_tag` (all sequences when nullopt). Throws Error(empty_result) when no
/// sequence matches.
ActivityGrid accumulate(std::span<const KeypointSequence> sequences,
                        const std::optional<std::string>& concept_tag, std::size_t grid_size = 64,
                        LandmarkSelector selector = LandmarkSelector::wrists);

/// Cells divided by their sum.
ActivityGrid normalize(const ActivityGrid& grid);

/// Pearson correlation of the flattened grids; 0 when either is constant.
double concept_similarity(const ActivityGrid& a, const ActivityGrid& b);

/// G lines of G comma-separated values.
std::string grid_csv(const ActivityGrid& grid);
ActivityGrid parse_grid_csv(std::string_view content);

/// Binary 8-bit PGM (P5), cells scaled so the maximum maps to 255.
std::string grid_pgm(const ActivityGrid& grid);

}  // namespace slr
