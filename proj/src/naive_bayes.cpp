#include "icurisk/naive_bayes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "icurisk/error.hpp"

namespace icurisk {

nlohmann::json to_json(const GnbParams& p) { return {{"var_smoothing", p.var_smoothing}}; }

GnbParams gnb_params_from_json(const nlohmann::json& j) {
  GnbParams p;
  p.var_smoothing = j.value("var_smoothing", p.var_smoothing);
  return p;
}

double GaussianNbModel::joint_log_likelihood(std::span<const double> row, int c) const {
  const auto& mu = mean[c];
  const auto& v = var[c];
  double ll = std::log(prior[c]);
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const double d = row[j] - mu[j];
    ll -= 0.5 * (std::log(2.0 * std::numbers::pi * v[j]) + d * d / v[j]);
  }
  return ll;
}

std::array<double, 2> GaussianNbModel::posterior(std::span<const double> row) const {
  const double l0 = joint_log_likelihood(row, 0);
  const double l1 = joint_log_likelihood(row, 1);
  const double mx = std::max(l0, l1);
  const double lse = mx + std::log(std::exp(l0 - mx) + std::exp(l1 - mx));
  return {std::exp(l0 - lse), std::exp(l1 - lse)};
}

double GaussianNbModel::margin(std::span<const double> row) const {
  return joint_log_likelihood(row, 1) - joint_log_likelihood(row, 0);
}

GaussianNbModel train_gnb(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                          const GnbParams& params) {
  const std::size_t n = x.rows(), d = x.cols();
  if (y.size() != n || weights.size() != n) throw ConfigError("labels/weights length mismatch");
  if (params.var_smoothing < 0.0) throw ConfigError("var_smoothing must be >= 0");

  GaussianNbModel m;
  m.params = params;
  std::array<double, 2> wsum{0.0, 0.0};
  for (int c = 0; c < 2; ++c) {
    m.mean[c].assign(d, 0.0);
    m.var[c].assign(d, 0.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int c = y[i] == 1 ? 1 : 0;
    wsum[c] += weights[i];
    auto row = x.row(i);
    for (std::size_t j = 0; j < d; ++j) m.mean[c][j] += weights[i] * row[j];
  }
  if (!(wsum[0] > 0.0) || !(wsum[1] > 0.0)) throw DataError("naive Bayes needs both classes");
  for (int c = 0; c < 2; ++c)
    for (std::size_t j = 0; j < d; ++j) m.mean[c][j] /= wsum[c];
  for (std::size_t i = 0; i < n; ++i) {
    const int c = y[i] == 1 ? 1 : 0;
    auto row = x.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double e = row[j] - m.mean[c][j];
      m.var[c][j] += weights[i] * e * e;
    }
  }
  double max_var = 0.0;
  for (int c = 0; c < 2; ++c)
    for (std::size_t j = 0; j < d; ++j) {
      m.var[c][j] /= wsum[c];
      max_var = std::max(max_var, m.var[c][j]);
    }
  m.var_floor = std::max(params.var_smoothing * max_var, 1e-12);
  for (int c = 0; c < 2; ++c)
    for (auto& v : m.var[c]) v = std::max(v, m.var_floor);
  m.prior = {wsum[0] / (wsum[0] + wsum[1]), wsum[1] / (wsum[0] + wsum[1])};
  return m;
}

nlohmann::json to_json(const GaussianNbModel& m) {
  return {{"params", to_json(m.params)},
          {"prior", m.prior},
          {"mean", {m.mean[0], m.mean[1]}},
          {"var", {m.var[0], m.var[1]}},
          {"var_floor", m.var_floor}};
}

GaussianNbModel gnb_from_json(const nlohmann::json& j) {
  GaussianNbModel m;
  m.params = gnb_params_from_json(j.at("params"));
  m.prior = j.at("prior").get<std::array<double, 2>>();
  for (int c = 0; c < 2; ++c) {
    m.mean[c] = j.at("mean").at(c).get<std::vector<double>>();
    m.var[c] = j.at("var").at(c).get<std::vector<double>>();
  }
  m.var_floor = j.at("var_floor").get<double>();
  return m;
}

}  // namespace icurisk
