#include "icurisk/ale.hpp"

#include <algorithm>

#include "icurisk/error.hpp"

namespace icurisk {

namespace {

AleCurve binary_ale(const BatchModel& model, const Matrix& x, std::size_t j) {
  Matrix lo = x, hi = x;
  std::size_t n1 = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (x(r, j) != 0.0 && x(r, j) != 1.0) throw DataError("binary ALE column holds values other than 0/1");
    n1 += x(r, j) == 1.0;
    lo(r, j) = 0.0;
    hi(r, j) = 1.0;
  }
  const auto f0 = model(lo), f1 = model(hi);
  double delta = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) delta += f1[r] - f0[r];
  delta /= static_cast<double>(x.rows());
  const std::size_t n0 = x.rows() - n1;
  const double n = static_cast<double>(x.rows());
  AleCurve c;
  c.binary = true;
  c.edges = {0.0, 1.0};
  c.effects = {-static_cast<double>(n1) / n * delta, static_cast<double>(n0) / n * delta};
  c.counts = {n0, n1};
  return c;
}

}  // namespace

AleCurve ale(const BatchModel& model, const Matrix& x, std::size_t j, std::size_t n_bins, bool binary) {
  if (x.empty()) throw DataError("ALE needs at least one row");
  if (j >= x.cols()) throw ConfigError("ALE feature index out of range");
  if (binary) return binary_ale(model, x, j);
  if (n_bins < 1) throw ConfigError("ALE needs n_bins >= 1");

  std::vector<double> sorted = x.column(j);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::vector<double> edges;
  for (std::size_t k = 0; k <= n_bins; ++k) {
    const std::size_t idx = k * (n - 1) / n_bins;
    if (edges.empty() || sorted[idx] > edges.back()) edges.push_back(sorted[idx]);
  }
  AleCurve c;
  if (edges.size() < 2) {
    // Constant column: a single edge with zero effect.
    c.edges = edges;
    c.effects = {0.0};
    c.counts = {n};
    return c;
  }
  const std::size_t K = edges.size() - 1;

  std::vector<std::size_t> bin(n);
  c.counts.assign(K, 0);
  Matrix lo = x, hi = x;
  for (std::size_t r = 0; r < n; ++r) {
    const double v = x(r, j);
    // First k with v <= edges[k]; bin k-1 covers (edges[k-1], edges[k]].
    const auto it = std::lower_bound(edges.begin() + 1, edges.end(), v);
    const auto b = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - edges.begin() - 1,
                                                                     static_cast<std::ptrdiff_t>(K - 1)));
    bin[r] = b;
    ++c.counts[b];
    lo(r, j) = edges[b];
    hi(r, j) = edges[b + 1];
  }
  const auto f_lo = model(lo), f_hi = model(hi);
  std::vector<double> local(K, 0.0);
  for (std::size_t r = 0; r < n; ++r) local[bin[r]] += f_hi[r] - f_lo[r];

  std::vector<double> acc(K + 1, 0.0);
  for (std::size_t k = 0; k < K; ++k) acc[k + 1] = acc[k] + local[k] / static_cast<double>(c.counts[k]);
  double centre = 0.0;
  for (std::size_t k = 0; k < K; ++k)
    centre += static_cast<double>(c.counts[k]) * 0.5 * (acc[k] + acc[k + 1]);
  centre /= static_cast<double>(n);
  c.edges = std::move(edges);
  c.effects.resize(K + 1);
  for (std::size_t k = 0; k <= K; ++k) c.effects[k] = acc[k] - centre;
  return c;
}

double ale_weighted_mean(const AleCurve& c) {
  double s = 0.0, n = 0.0;
  if (c.binary || c.effects.size() == 1) {
    for (std::size_t k = 0; k < c.counts.size(); ++k) {
      s += static_cast<double>(c.counts[k]) * c.effects[k];
      n += static_cast<double>(c.counts[k]);
    }
  } else {
    for (std::size_t k = 0; k < c.counts.size(); ++k) {
      s += static_cast<double>(c.counts[k]) * 0.5 * (c.effects[k] + c.effects[k + 1]);
      n += static_cast<double>(c.counts[k]);
    }
  }
  return s / n;
}

nlohmann::json to_json(const AleCurve& c) {
  return {{"feature", c.feature}, {"binary", c.binary}, {"edges", c.edges},
          {"effects", c.effects}, {"counts", c.counts}};
}

AleCurve ale_from_json(const nlohmann::json& j) {
  AleCurve c;
  c.feature = j.at("feature").get<std::string>();
  c.binary = j.at("binary").get<bool>();
  c.edges = j.at("edges").get<std::vector<double>>();
  c.effects = j.at("effects").get<std::vector<double>>();
  c.counts = j.at("counts").get<std::vector<std::size_t>>();
  return c;
}

}  // namespace icurisk
