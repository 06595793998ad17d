#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "icurisk/matrix.hpp"

namespace icurisk {

enum class Penalty { l1, l2 };
std::string to_string(Penalty p);
Penalty penalty_from_string(const std::string& s);

struct LogregParams {
  Penalty penalty = Penalty::l2;
  double C = 1.0;
  int max_iter = 100;
  double tol = 1e-6;

  bool operator==(const LogregParams&) const = default;
};

nlohmann::json to_json(const LogregParams& p);
LogregParams logreg_params_from_json(const nlohmann::json& j);

struct LinearModel {
  LogregParams params;
  std::vector<double> weights;
  double bias = 0.0;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;

  double margin(std::span<const double> row) const;
};

/// C * sum_i w_i * logloss_i + P(beta), with P = 0.5 * ||beta||^2 (L2) or
/// ||beta||_1 (L1); the bias is unpenalized.
double logreg_objective(const Matrix& x, std::span<const int> y, std::span<const double> w,
                        const LogregParams& params, std::span<const double> beta, double bias);

/// Proximal Newton with coordinate-descent inner solves and backtracking.
/// Stops when the max-norm of the (sub)gradient, divided by
/// max(1, C * sum(w)), drops below `tol`; otherwise returns the last iterate
/// with `converged == false`.
LinearModel train_logreg(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                         const LogregParams& params);

nlohmann::json to_json(const LinearModel& m);
LinearModel linear_from_json(const nlohmann::json& j);

}  // namespace icurisk
