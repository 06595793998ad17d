#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "icurisk/matrix.hpp"
#include "icurisk/shap.hpp"

namespace icurisk {

struct AleCurve {
  std::string feature;
  bool binary = false;
  std::vector<double> edges;    // z_0 .. z_K (binary: the two levels 0, 1)
  std::vector<double> effects;  // centered accumulated effect at each edge
  /// Continuous: rows per bin (size K). Binary: rows per level (size 2).
  std::vector<std::size_t> counts;
};

/// Bin edges are order statistics of column j at the quantiles k / n_bins,
/// deduplicated, so every bin (z_{k-1}, z_k] holds at least one row (the
/// first bin also holds z_0). Each bin's local effect is the mean of
/// f(z_k, x_-j) - f(z_{k-1}, x_-j) over its rows. The accumulated curve is
/// centered so its count-weighted bin-midpoint mean is zero. Binary columns
/// use the single difference f(1, x_-j) - f(0, x_-j), centered over the two
/// level counts.
AleCurve ale(const BatchModel& model, const Matrix& x, std::size_t j, std::size_t n_bins,
             bool binary = false);

/// Count-weighted mean of the centered curve (zero up to rounding).
double ale_weighted_mean(const AleCurve& curve);

nlohmann::json to_json(const AleCurve& c);
AleCurve ale_from_json(const nlohmann::json& j);

}  // namespace icurisk
