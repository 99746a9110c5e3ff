// SPDX-License-Identifier: Apache-2.0
#include "slr/heatmap.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "slr/error.hpp"

namespace slr {

std::string_view to_string(LandmarkSelector selector) {
  return selector == LandmarkSelector::wrists ? "wrists" : "hands";
}

LandmarkSelector parse_landmark_selector(std::string_view text) {
  if (text == "wrists") return LandmarkSelector::wrists;
  if (text == "hands" || text == "all_hands") return LandmarkSelector::all_hands;
  throw Error(ErrorKind::invalid_argument, "unknown landmark selector '" + std::string(text) + "'");
}

double ActivityGrid::total() const { return std::accumulate(cells.begin(), cells.end(), 0.0); }

ActivityGrid& ActivityGrid::operator+=(const ActivityGrid& other) {
  if (other.size != size) throw Error(ErrorKind::dimension, "grid sizes differ");
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] += other.cells[i];
  count += other.count;
  return *this;
}

ActivityGrid empty_grid(std::size_t size) {
  if (size == 0) throw Error(ErrorKind::invalid_argument, "grid size must be >= 1");
  ActivityGrid g;
  g.size = size;
  g.cells.assign(size * size, 0.0);
  return g;
}

namespace {

std::size_t cell_index(double v, std::size_t g) {
  const double scaled = std::floor(v * static_cast<double>(g));
  if (!(scaled > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(scaled), g - 1);
}

}  // namespace

ActivityGrid accumulate(std::span<const KeypointSequence> sequences,
                        const std::optional<std::string>& concept_tag, std::size_t grid_size,
                        LandmarkSelector selector) {
  ActivityGrid grid = empty_grid(grid_size);
  if (concept_tag) grid.concept_tag = *concept_tag;
  const std::size_t per_hand = selector == LandmarkSelector::wrists ? 1 : kHandLandmarks;
  bool matched = false;
  for (const auto& seq : sequences) {
    if (concept_tag && seq.concept_tag != concept_tag) continue;
    if (!matched) grid.dataset_id = seq.dataset_id;
    else if (grid.dataset_id != seq.dataset_id) grid.dataset_id = "mixed";
    matched = true;
    for (const auto& frame : seq.frames)
      for (Hand hand : {Hand::left, Hand::right}) {
        if (!frame.presence[static_cast<std::size_t>(hand)]) continue;
        for (std::size_t k = 0; k < per_hand; ++k) {
          const std::size_t lm = hand_begin(hand) + k;
          const std::size_t row = cell_index(frame.y(lm), grid_size);
          const std::size_t col = cell_index(frame.x(lm), grid_size);
          grid.cells[row * grid_size + col] += 1.0;
          grid.count += 1;
        }
      }
  }
  if (!matched)
    throw Error(ErrorKind::empty_result,
                "no sequence with concept '" + concept_tag.value_or("*") + "'");
  return grid;
}

ActivityGrid normalize(const ActivityGrid& grid) {
  const double mass = grid.total();
  if (!(mass > 0.0)) throw Error(ErrorKind::empty_result, "cannot normalize an empty grid");
  ActivityGrid out = grid;
  for (double& c : out.cells) c /= mass;
  return out;
}

double concept_similarity(const ActivityGrid& a, const ActivityGrid& b) {
  if (a.size != b.size || a.cells.size() != b.cells.size())
    throw Error(ErrorKind::dimension, "grid sizes differ");
  const auto n = static_cast<double>(a.cells.size());
  const double ma = a.total() / n, mb = b.total() / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const double da = a.cells[i] - ma, db = b.cells[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

std::string grid_csv(const ActivityGrid& grid) {
  std::string out;
  char buf[32];
  for (std::size_t r = 0; r < grid.size; ++r) {
    for (std::size_t c = 0; c < grid.size; ++c) {
      if (c) out += ',';
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, grid.at(r, c));
      out.append(buf, end);
    }
    out += '\n';
  }
  return out;
}

ActivityGrid parse_grid_csv(std::string_view content) {
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string_view line = content.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string_view::npos) comma = line.size();
      double v = 0.0;
      const auto field = line.substr(start, comma - start);
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size() || v < 0.0)
        throw Error(ErrorKind::format, "bad grid cell '" + std::string(field) + "'");
      row.push_back(v);
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::format, "empty grid file");
  ActivityGrid g = empty_grid(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != g.size) throw Error(ErrorKind::format, "grid is not square");
    std::copy(rows[r].begin(), rows[r].end(), g.cells.begin() + static_cast<std::ptrdiff_t>(r * g.size));
  }
  return g;
}

std::string grid_pgm(const ActivityGrid& grid) {
  std::string out = "P5\n" + std::to_string(grid.size) + " " + std::to_string(grid.size) + "\n255\n";
  const double top = grid.cells.empty() ? 0.0 : *std::max_element(grid.cells.begin(), grid.cells.end());
  for (double c : grid.cells) {
    const double v = top > 0.0 ? std::round(255.0 * c / top) : 0.0;
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(v, 0.0, 255.0))));
  }
  return out;
}

}  // namespace slr
