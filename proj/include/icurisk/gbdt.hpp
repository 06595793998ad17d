#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <json.hpp>

#include "icurisk/matrix.hpp"

namespace icurisk {

struct GbdtParams {
  int max_depth = 3;
  int n_trees = 100;
  double learning_rate = 0.1;
  double subsample = 1.0;
  double l2_leaf = 1.0;
  double min_child_weight = 1.0;
  /// Encode categorical columns with ordered target statistics computed
  /// over a random permutation of the training rows.
  bool ordered_mode = false;
  /// Smoothing weight of the prior in ordered target statistics.
  double ordered_prior_weight = 1.0;
  int max_bins = 128;

  bool operator==(const GbdtParams&) const = default;
};

nlohmann::json to_json(const GbdtParams& p);
GbdtParams gbdt_params_from_json(const nlohmann::json& j);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x <= threshold goes left
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf score before the learning rate
  double cover = 0.0;  // hessian sum of training rows reaching the node

  bool is_leaf() const noexcept { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int depth() const;
};

/// Target statistics for one categorical column, used at inference time:
/// (sum_y + w * prior) / (count + w).
struct OrderedCategory {
  std::size_t column = 0;
  double prior = 0.0;
  double prior_weight = 1.0;
  std::map<double, std::pair<double, double>> stats;  // level -> (count, sum_y)

  double encode(double level) const;
};

struct GbdtModel {
  GbdtParams params;
  double base_score = 0.0;  // log-odds
  std::size_t n_features = 0;
  std::vector<Tree> trees;
  std::vector<OrderedCategory> categorical;
  std::vector<double> train_loss;  // weighted logistic loss after each tree

  /// Value the trees compare against for feature f (encodes categoricals).
  double feature_value(std::span<const double> row, std::size_t f) const;
  /// Index of the leaf reached by `row` in tree t.
  int leaf_index(std::size_t t, std::span<const double> row) const;
  /// base + lr * sum of leaf scores.
  double margin(std::span<const double> row) const;
};

/// Stagewise Newton boosting of the weighted logistic loss. Splits are the
/// greedy max-gain cut over binned features, gain
/// 0.5 * (GL^2/(HL+l2) + GR^2/(HR+l2) - G^2/(H+l2)), each child needing
/// hessian >= min_child_weight. Constant features never split; if no split
/// helps at the root, boosting stops and the model is its base score.
GbdtModel train_gbdt(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                     const GbdtParams& params, std::uint64_t seed,
                     std::span<const std::size_t> categorical_columns = {});

/// Weighted mean logistic loss of margins.
double weighted_logistic_loss(std::span<const double> margins, std::span<const int> y,
                              std::span<const double> weights);

nlohmann::json to_json(const GbdtModel& m);
GbdtModel gbdt_from_json(const nlohmann::json& j);

}  // namespace icurisk
