#include "icurisk/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "icurisk/error.hpp"
#include "icurisk/rng.hpp"

namespace icurisk {

std::vector<double> shap_exhaustive(const BatchModel& model, std::span<const double> row,
                                    const Matrix& background) {
  const std::size_t d = row.size();
  if (d > kMaxExhaustiveFeatures)
    throw ConfigError("exhaustive attribution refuses " + std::to_string(d) +
                      " features; use the tree algorithm");
  if (background.empty()) throw ConfigError("background must be nonempty");
  if (background.cols() != d) throw SchemaError("background width differs from the row");

  const std::size_t n_sub = std::size_t{1} << d;
  const std::size_t nb = background.rows();
  std::vector<double> value(n_sub);
  Matrix hybrid(nb, d);
  for (std::size_t mask = 0; mask < n_sub; ++mask) {
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t j = 0; j < d; ++j) hybrid(b, j) = (mask >> j) & 1 ? row[j] : background(b, j);
    const auto out = model(hybrid);
    double s = 0.0;
    for (double v : out) s += v;
    value[mask] = s / static_cast<double>(nb);
  }

  // weight[s] = s! (d - s - 1)! / d!
  std::vector<double> weight(d);
  for (std::size_t s = 0; s < d; ++s)
    weight[s] = std::exp(std::lgamma(static_cast<double>(s) + 1.0) +
                         std::lgamma(static_cast<double>(d - s)) - std::lgamma(static_cast<double>(d) + 1.0));
  std::vector<double> phi(d, 0.0);
  for (std::size_t mask = 0; mask < n_sub; ++mask) {
    const auto size = static_cast<std::size_t>(std::popcount(mask));
    for (std::size_t i = 0; i < d; ++i)
      if (!((mask >> i) & 1)) phi[i] += weight[size] * (value[mask | (std::size_t{1} << i)] - value[mask]);
  }
  return phi;
}

namespace {

// W[a][n] = a! (n - a)! / (n + 1)!
std::vector<std::vector<double>> coalition_weights(std::size_t max_players) {
  std::vector<std::vector<double>> w(max_players + 1, std::vector<double>(max_players + 1, 0.0));
  for (std::size_t n = 0; n <= max_players; ++n)
    for (std::size_t a = 0; a <= n; ++a)
      w[a][n] = std::exp(std::lgamma(static_cast<double>(a) + 1.0) +
                         std::lgamma(static_cast<double>(n - a) + 1.0) -
                         std::lgamma(static_cast<double>(n) + 2.0));
  return w;
}

struct PairWalker {
  const GbdtModel& model;
  const Tree& tree;
  const std::vector<std::vector<double>>& W;
  std::span<const double> x, z;
  std::span<double> phi;  // accumulates this tree's contribution
  std::vector<signed char> role;  // per feature: 0 unseen, 1 follows x, -1 follows z
  std::size_t n_x = 0, n_z = 0;

  int child(int node, std::span<const double> r) const {
    const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
    return model.feature_value(r, static_cast<std::size_t>(nd.feature)) <= nd.threshold ? nd.left : nd.right;
  }

  // Returns (sum of positive weights, sum of negative weights) of the leaves below.
  std::pair<double, double> walk(int node) {
    const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
    if (nd.is_leaf()) {
      const std::size_t n = n_x + n_z;
      const double pos = n_x > 0 ? W[n_x - 1][n - 1] * nd.value : 0.0;
      const double neg = n_z > 0 ? W[n_x][n - 1] * nd.value : 0.0;
      return {pos, neg};
    }
    const int cx = child(node, x), cz = child(node, z);
    if (cx == cz) return walk(cx);
    const auto f = static_cast<std::size_t>(nd.feature);
    if (role[f] == 1) return walk(cx);
    if (role[f] == -1) return walk(cz);
    role[f] = 1;
    ++n_x;
    const auto [pos_x, neg_x] = walk(cx);
    --n_x;
    role[f] = -1;
    ++n_z;
    const auto [pos_z, neg_z] = walk(cz);
    --n_z;
    role[f] = 0;
    phi[f] += pos_x - neg_z;
    return {pos_x + pos_z, neg_x + neg_z};
  }
};

}  // namespace

ShapMatrix shap_tree(const GbdtModel& model, const Matrix& rows, const Matrix& background, Exec exec) {
  const std::size_t d = model.n_features;
  if (rows.cols() != d || background.cols() != d) throw SchemaError("attribution input width differs from the model");
  if (background.empty()) throw ConfigError("background must be nonempty");

  int max_depth = 0;
  for (const auto& t : model.trees) max_depth = std::max(max_depth, t.depth());
  const auto W = coalition_weights(static_cast<std::size_t>(max_depth) + 1);

  ShapMatrix out;
  out.phi = Matrix(rows.rows(), d);
  double base = 0.0;
  for (std::size_t b = 0; b < background.rows(); ++b) base += model.margin(background.row(b));
  out.base_value = base / static_cast<double>(background.rows());

  const double scale = model.params.learning_rate / static_cast<double>(background.rows());
  auto explain_row = [&](std::size_t r) {
    std::vector<double> acc(d, 0.0);
    for (const auto& tree : model.trees) {
      if (tree.nodes.size() < 2) continue;
      for (std::size_t b = 0; b < background.rows(); ++b) {
        PairWalker w{model, tree, W, rows.row(r), background.row(b), acc, std::vector<signed char>(d, 0)};
        w.walk(0);
      }
    }
    for (std::size_t j = 0; j < d; ++j) out.phi(r, j) = acc[j] * scale;
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows.rows()); ++r)
      explain_row(static_cast<std::size_t>(r));
  } else {
    for (std::size_t r = 0; r < rows.rows(); ++r) explain_row(r);
  }
  return out;
}

Matrix background_sample(const Matrix& x, std::size_t cap, std::uint64_t seed) {
  if (x.rows() <= cap) return x;
  std::vector<std::size_t> idx(x.rows());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_rng(seed);
  for (std::size_t i = 0; i < cap; ++i) std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  return x.select_rows(idx);
}

}  // namespace icurisk
