#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "icurisk/dataset.hpp"
#include "icurisk/rng.hpp"

namespace icurisk::testing {

inline FeatureSpec continuous(std::string name) { return {std::move(name), FeatureKind::continuous, "", {}, {}, {}}; }
inline FeatureSpec binary(std::string name) { return {std::move(name), FeatureKind::binary, "", 0.0, 1.0, {}}; }
inline FeatureSpec categorical(std::string name, std::vector<std::string> levels) {
  return {std::move(name), FeatureKind::categorical, "", {}, {}, std::move(levels)};
}

/// Table from row-major cells; NAN marks a missing cell.
inline CohortTable table(Schema schema, const std::vector<std::vector<double>>& rows, std::vector<int> labels) {
  std::vector<Cell> cells;
  for (const auto& r : rows)
    for (double v : r) cells.push_back(std::isnan(v) ? Cell{} : Cell{v});
  return CohortTable(std::move(schema), std::move(cells), std::move(labels));
}

/// Two Gaussian features, the first shifted by the label, plus a noise column.
inline CohortTable separable(std::size_t n, std::uint64_t seed, double shift = 2.0) {
  Rng rng = make_rng(seed);
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = uniform01(rng) < 0.3 ? 1 : 0;
    y.push_back(label);
    rows.push_back({shift * label + standard_normal(rng), 0.5 * label + standard_normal(rng), standard_normal(rng)});
  }
  return table({continuous("a"), continuous("b"), continuous("noise")}, rows, y);
}

inline double sigmoid(double m) { return 1.0 / (1.0 + std::exp(-m)); }

}  // namespace icurisk::testing
