#pragma once

#include <array>
#include <span>
#include <vector>

#include <json.hpp>

#include "icurisk/matrix.hpp"

namespace icurisk {

struct GnbParams {
  /// Variance floor as a fraction of the largest per-feature variance.
  double var_smoothing = 1e-9;

  bool operator==(const GnbParams&) const = default;
};

nlohmann::json to_json(const GnbParams& p);
GnbParams gnb_params_from_json(const nlohmann::json& j);

struct GaussianNbModel {
  GnbParams params;
  std::array<double, 2> prior{0.5, 0.5};
  std::array<std::vector<double>, 2> mean;
  std::array<std::vector<double>, 2> var;
  double var_floor = 0.0;

  /// Joint log-likelihood log p(y=c) + sum_j log N(x_j; mu_cj, var_cj).
  double joint_log_likelihood(std::span<const double> row, int c) const;
  /// Posterior (p0, p1) via log-sum-exp.
  std::array<double, 2> posterior(std::span<const double> row) const;
  /// Log posterior odds; sigmoid(margin) is p1.
  double margin(std::span<const double> row) const;
};

/// Weighted per-class priors, means and variances. Variances are floored at
/// max(var_smoothing * max_variance, 1e-12).
GaussianNbModel train_gnb(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                          const GnbParams& params = {});

nlohmann::json to_json(const GaussianNbModel& m);
GaussianNbModel gnb_from_json(const nlohmann::json& j);

}  // namespace icurisk
