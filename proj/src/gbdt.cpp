#include "icurisk/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "icurisk/error.hpp"
#include "icurisk/numeric.hpp"
#include "icurisk/rng.hpp"

namespace icurisk {

nlohmann::json to_json(const GbdtParams& p) {
  return {{"max_depth", p.max_depth},         {"n_trees", p.n_trees},
          {"learning_rate", p.learning_rate}, {"subsample", p.subsample},
          {"l2_leaf", p.l2_leaf},             {"min_child_weight", p.min_child_weight},
          {"ordered_mode", p.ordered_mode},   {"ordered_prior_weight", p.ordered_prior_weight},
          {"max_bins", p.max_bins}};
}

GbdtParams gbdt_params_from_json(const nlohmann::json& j) {
  GbdtParams p;
  p.max_depth = j.value("max_depth", p.max_depth);
  p.n_trees = j.value("n_trees", p.n_trees);
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.subsample = j.value("subsample", p.subsample);
  p.l2_leaf = j.value("l2_leaf", p.l2_leaf);
  p.min_child_weight = j.value("min_child_weight", p.min_child_weight);
  p.ordered_mode = j.value("ordered_mode", p.ordered_mode);
  p.ordered_prior_weight = j.value("ordered_prior_weight", p.ordered_prior_weight);
  p.max_bins = j.value("max_bins", p.max_bins);
  return p;
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  int best = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [n, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (!nodes[n].is_leaf()) {
      stack.push_back({nodes[n].left, d + 1});
      stack.push_back({nodes[n].right, d + 1});
    }
  }
  return best;
}

double OrderedCategory::encode(double level) const {
  auto it = stats.find(level);
  const double cnt = it == stats.end() ? 0.0 : it->second.first;
  const double sum = it == stats.end() ? 0.0 : it->second.second;
  return (sum + prior_weight * prior) / (cnt + prior_weight);
}

double GbdtModel::feature_value(std::span<const double> row, std::size_t f) const {
  for (const auto& c : categorical)
    if (c.column == f) return c.encode(row[f]);
  return row[f];
}

int GbdtModel::leaf_index(std::size_t t, std::span<const double> row) const {
  const auto& nodes = trees[t].nodes;
  int n = 0;
  while (!nodes[n].is_leaf()) {
    const auto f = static_cast<std::size_t>(nodes[n].feature);
    n = feature_value(row, f) <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
  }
  return n;
}

double GbdtModel::margin(std::span<const double> row) const {
  double s = 0.0;
  for (std::size_t t = 0; t < trees.size(); ++t) s += trees[t].nodes[leaf_index(t, row)].value;
  return base_score + params.learning_rate * s;
}

double weighted_logistic_loss(std::span<const double> margins, std::span<const int> y,
                              std::span<const double> weights) {
  double loss = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    loss += weights[i] * logistic_loss(margins[i], y[i]);
    wsum += weights[i];
  }
  return wsum > 0.0 ? loss / wsum : 0.0;
}

namespace {

struct BinnedColumn {
  std::vector<double> cuts;  // bin b holds (cuts[b-1], cuts[b]]
  std::vector<std::uint16_t> bins;
};

double midpoint(double a, double b) {
  const double m = a + (b - a) / 2.0;
  return m >= b ? a : m;
}

BinnedColumn bin_column(const std::vector<double>& values, int max_bins) {
  BinnedColumn col;
  std::vector<double> uniq(values);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (uniq.size() <= static_cast<std::size_t>(max_bins)) {
    for (std::size_t i = 0; i + 1 < uniq.size(); ++i) col.cuts.push_back(midpoint(uniq[i], uniq[i + 1]));
  } else {
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    for (int q = 1; q < max_bins; ++q) {
      const double v = sorted[static_cast<std::size_t>(static_cast<double>(q) / max_bins * static_cast<double>(n - 1))];
      auto it = std::upper_bound(uniq.begin(), uniq.end(), v);
      if (it == uniq.end()) continue;
      const double cut = midpoint(*(it - 1), *it);
      if (col.cuts.empty() || cut > col.cuts.back()) col.cuts.push_back(cut);
    }
  }
  col.bins.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    col.bins[i] = static_cast<std::uint16_t>(
        std::lower_bound(col.cuts.begin(), col.cuts.end(), values[i]) - col.cuts.begin());
  return col;
}

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  int bin = -1;  // left = bins <= bin
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<BinnedColumn>& cols, std::span<const double> g, std::span<const double> h,
              const GbdtParams& params)
      : cols_(cols), g_(g), h_(h), params_(params) {}

  Tree build(std::vector<std::size_t> rows) {
    Tree tree;
    tree.nodes.emplace_back();
    grow(tree, 0, std::move(rows), 0);
    return tree;
  }

 private:
  double leaf_value(double G, double H) const { return -G / (H + params_.l2_leaf); }
  double score(double G, double H) const { return G * G / (H + params_.l2_leaf); }

  SplitCandidate best_split(const std::vector<std::size_t>& rows, double G, double H) const {
    SplitCandidate best;
    const double parent = score(G, H);
    std::vector<double> hg, hh;
    for (std::size_t f = 0; f < cols_.size(); ++f) {
      const auto& col = cols_[f];
      if (col.cuts.empty()) continue;
      const std::size_t nb = col.cuts.size() + 1;
      hg.assign(nb, 0.0);
      hh.assign(nb, 0.0);
      for (auto r : rows) {
        hg[col.bins[r]] += g_[r];
        hh[col.bins[r]] += h_[r];
      }
      double gl = 0.0, hl = 0.0;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        gl += hg[b];
        hl += hh[b];
        const double gr = G - gl, hr = H - hl;
        if (hl < params_.min_child_weight || hr < params_.min_child_weight) continue;
        const double gain = 0.5 * (score(gl, hl) + score(gr, hr) - parent);
        if (gain > best.gain + 1e-12 * std::abs(best.gain)) {
          best = {gain, static_cast<int>(f), static_cast<int>(b)};
        }
      }
    }
    return best;
  }

  void grow(Tree& tree, int node, std::vector<std::size_t> rows, int depth) {
    double G = 0.0, H = 0.0;
    for (auto r : rows) {
      G += g_[r];
      H += h_[r];
    }
    tree.nodes[node].cover = H;
    tree.nodes[node].value = leaf_value(G, H);
    if (depth >= params_.max_depth || rows.size() < 2) return;
    const SplitCandidate split = best_split(rows, G, H);
    if (split.feature < 0 || !(split.gain > 1e-12)) return;

    const auto& col = cols_[static_cast<std::size_t>(split.feature)];
    std::vector<std::size_t> left, right;
    for (auto r : rows) (col.bins[r] <= split.bin ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const int l = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& n = tree.nodes[node];
    n.feature = split.feature;
    n.threshold = col.cuts[static_cast<std::size_t>(split.bin)];
    n.left = l;
    n.right = l + 1;
    grow(tree, l, std::move(left), depth + 1);
    grow(tree, l + 1, std::move(right), depth + 1);
  }

  const std::vector<BinnedColumn>& cols_;
  std::span<const double> g_;
  std::span<const double> h_;
  const GbdtParams& params_;
};

int leaf_by_bins(const Tree& tree, const std::vector<BinnedColumn>& cols, std::size_t r) {
  int n = 0;
  while (!tree.nodes[n].is_leaf()) {
    const auto& nd = tree.nodes[n];
    const auto& col = cols[static_cast<std::size_t>(nd.feature)];
    n = col.bins[r] <= static_cast<std::size_t>(std::lower_bound(col.cuts.begin(), col.cuts.end(), nd.threshold) -
                                                col.cuts.begin())
            ? nd.left
            : nd.right;
  }
  return n;
}

}  // namespace

GbdtModel train_gbdt(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                     const GbdtParams& params, std::uint64_t seed,
                     std::span<const std::size_t> categorical_columns) {
  const std::size_t n = x.rows(), d = x.cols();
  if (n == 0) throw DataError("cannot train on an empty table");
  if (y.size() != n || weights.size() != n) throw ConfigError("labels/weights length mismatch");
  if (params.max_depth < 1 || params.n_trees < 0 || !(params.learning_rate > 0.0) ||
      !(params.subsample > 0.0 && params.subsample <= 1.0) || params.l2_leaf < 0.0 || params.max_bins < 2 ||
      params.max_bins > 65535)
    throw ConfigError("invalid boosted-tree parameters");
  for (double v : x.data())
    if (!std::isfinite(v)) throw DataError("boosted trees need finite, imputed inputs");

  GbdtModel model;
  model.params = params;
  model.n_features = d;

  // Columns the trees see; categorical ones replaced by ordered statistics.
  std::vector<std::vector<double>> columns(d);
  for (std::size_t f = 0; f < d; ++f) columns[f] = x.column(f);

  if (params.ordered_mode && !categorical_columns.empty()) {
    double prior = 0.0;
    for (int v : y) prior += v;
    prior /= static_cast<double>(n);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng = make_rng(seed, 0xca7);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(rng, i)]);
    for (auto c : categorical_columns) {
      if (c >= d) throw ConfigError("categorical column index out of range");
      OrderedCategory oc;
      oc.column = c;
      oc.prior = prior;
      oc.prior_weight = params.ordered_prior_weight;
      auto& col = columns[c];
      for (auto r : perm) {
        auto& [cnt, sum] = oc.stats[x(r, c)];
        col[r] = (sum + oc.prior_weight * prior) / (cnt + oc.prior_weight);
        cnt += 1.0;
        sum += y[r];
      }
      model.categorical.push_back(std::move(oc));
    }
  }

  std::vector<BinnedColumn> binned(d);
  for (std::size_t f = 0; f < d; ++f) binned[f] = bin_column(columns[f], params.max_bins);

  double wpos = 0.0, wneg = 0.0;
  for (std::size_t i = 0; i < n; ++i) (y[i] == 1 ? wpos : wneg) += weights[i];
  const double prior = std::clamp(wpos / (wpos + wneg), 1e-6, 1.0 - 1e-6);
  model.base_score = logit(prior);

  std::vector<double> margin(n, model.base_score), g(n), h(n);
  Rng rng = make_rng(seed, 0x5ab);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const auto n_sample = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(params.subsample * n)));

  for (int t = 0; t < params.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      g[i] = weights[i] * (p - y[i]);
      h[i] = std::max(weights[i] * p * (1.0 - p), 1e-16);
    }
    std::vector<std::size_t> rows;
    if (n_sample < n) {
      std::vector<std::size_t> perm = all;
      for (std::size_t i = 0; i < n_sample; ++i) std::swap(perm[i], perm[i + uniform_index(rng, n - i)]);
      rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_sample));
      std::sort(rows.begin(), rows.end());
    } else {
      rows = all;
    }
    TreeBuilder builder(binned, g, h, params);
    Tree tree = builder.build(std::move(rows));
    if (tree.nodes.size() == 1) {
      if (n_sample == n) break;
      continue;
    }
    for (std::size_t i = 0; i < n; ++i)
      margin[i] += params.learning_rate * tree.nodes[leaf_by_bins(tree, binned, i)].value;
    model.trees.push_back(std::move(tree));
    model.train_loss.push_back(weighted_logistic_loss(margin, y, weights));
  }
  return model;
}

nlohmann::json to_json(const GbdtModel& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& nd : t.nodes)
      nodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.value, nd.cover});
    trees.push_back(nodes);
  }
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& c : m.categorical) {
    nlohmann::json stats = nlohmann::json::array();
    for (const auto& [level, cs] : c.stats) stats.push_back({level, cs.first, cs.second});
    cats.push_back({{"column", c.column}, {"prior", c.prior}, {"prior_weight", c.prior_weight}, {"stats", stats}});
  }
  return {{"params", to_json(m.params)}, {"base_score", m.base_score}, {"n_features", m.n_features},
          {"trees", trees},              {"categorical", cats},        {"train_loss", m.train_loss}};
}

GbdtModel gbdt_from_json(const nlohmann::json& j) {
  GbdtModel m;
  m.params = gbdt_params_from_json(j.at("params"));
  m.base_score = j.at("base_score").get<double>();
  m.n_features = j.at("n_features").get<std::size_t>();
  for (const auto& tj : j.at("trees")) {
    Tree t;
    for (const auto& nj : tj)
      t.nodes.push_back({nj.at(0).get<int>(), nj.at(1).get<double>(), nj.at(2).get<int>(), nj.at(3).get<int>(),
                         nj.at(4).get<double>(), nj.at(5).get<double>()});
    m.trees.push_back(std::move(t));
  }
  for (const auto& cj : j.at("categorical")) {
    OrderedCategory c;
    c.column = cj.at("column").get<std::size_t>();
    c.prior = cj.at("prior").get<double>();
    c.prior_weight = cj.at("prior_weight").get<double>();
    for (const auto& s : cj.at("stats")) c.stats[s.at(0).get<double>()] = {s.at(1).get<double>(), s.at(2).get<double>()};
    m.categorical.push_back(std::move(c));
  }
  m.train_loss = j.value("train_loss", std::vector<double>{});
  return m;
}

}  // namespace icurisk
