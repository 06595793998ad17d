#include "icurisk/linear.hpp"

#include <algorithm>
#include <cmath>

#include "icurisk/error.hpp"
#include "icurisk/log.hpp"
#include "icurisk/numeric.hpp"

namespace icurisk {

std::string to_string(Penalty p) { return p == Penalty::l1 ? "l1" : "l2"; }

Penalty penalty_from_string(const std::string& s) {
  if (s == "l1" || s == "L1") return Penalty::l1;
  if (s == "l2" || s == "L2") return Penalty::l2;
  throw ConfigError("unknown penalty '" + s + "'");
}

nlohmann::json to_json(const LogregParams& p) {
  return {{"penalty", to_string(p.penalty)}, {"C", p.C}, {"max_iter", p.max_iter}, {"tol", p.tol}};
}

LogregParams logreg_params_from_json(const nlohmann::json& j) {
  LogregParams p;
  p.penalty = penalty_from_string(j.value("penalty", std::string("l2")));
  p.C = j.value("C", p.C);
  p.max_iter = j.value("max_iter", p.max_iter);
  p.tol = j.value("tol", p.tol);
  return p;
}

double LinearModel::margin(std::span<const double> row) const {
  double m = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) m += weights[j] * row[j];
  return m;
}

namespace {

double penalty_value(const LogregParams& p, std::span<const double> beta) {
  double s = 0.0;
  for (double b : beta) s += p.penalty == Penalty::l1 ? std::abs(b) : 0.5 * b * b;
  return s;
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

}  // namespace

double logreg_objective(const Matrix& x, std::span<const int> y, std::span<const double> w,
                        const LogregParams& params, std::span<const double> beta, double bias) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double m = bias;
    auto row = x.row(i);
    for (std::size_t j = 0; j < beta.size(); ++j) m += beta[j] * row[j];
    loss += w[i] * logistic_loss(m, y[i]);
  }
  return params.C * loss + penalty_value(params, beta);
}

LinearModel train_logreg(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                         const LogregParams& params) {
  const std::size_t n = x.rows(), d = x.cols();
  if (n == 0) throw DataError("cannot train on an empty table");
  if (y.size() != n || weights.size() != n) throw ConfigError("labels/weights length mismatch");
  if (!(params.C > 0.0)) throw ConfigError("logistic regression needs C > 0");

  LinearModel model;
  model.params = params;
  std::vector<double> beta(d, 0.0);
  double bias = 0.0;
  {
    double wpos = 0.0, wneg = 0.0;
    for (std::size_t i = 0; i < n; ++i) (y[i] == 1 ? wpos : wneg) += weights[i];
    if (wpos > 0.0 && wneg > 0.0) bias = std::log(wpos / wneg);
  }
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  const double scale = std::max(1.0, params.C * wsum);
  const bool l1 = params.penalty == Penalty::l1;

  std::vector<double> m(n), p(n), h(n), r(n), g(d), delta(d), col_h(d);
  double f_cur = logreg_objective(x, y, weights, params, beta, bias);

  for (int it = 0; it < params.max_iter; ++it) {
    model.iterations = it;
    for (std::size_t i = 0; i < n; ++i) {
      double mi = bias;
      auto row = x.row(i);
      for (std::size_t j = 0; j < d; ++j) mi += beta[j] * row[j];
      m[i] = mi;
      p[i] = sigmoid(mi);
      h[i] = params.C * weights[i] * std::max(p[i] * (1.0 - p[i]), 1e-12);
    }
    double gb = 0.0;
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double e = params.C * weights[i] * (p[i] - y[i]);
      gb += e;
      auto row = x.row(i);
      for (std::size_t j = 0; j < d; ++j) g[j] += e * row[j];
    }

    double viol = std::abs(gb);
    for (std::size_t j = 0; j < d; ++j) {
      if (!l1) {
        viol = std::max(viol, std::abs(g[j] + beta[j]));
      } else if (beta[j] != 0.0) {
        viol = std::max(viol, std::abs(g[j] + (beta[j] > 0 ? 1.0 : -1.0)));
      } else {
        viol = std::max(viol, std::max(std::abs(g[j]) - 1.0, 0.0));
      }
    }
    if (viol / scale < params.tol) {
      model.converged = true;
      break;
    }

    // Coordinate descent on the local quadratic model; r = x * delta.
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(r.begin(), r.end(), 0.0);
    double db = 0.0, hsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) hsum += h[i];
    for (std::size_t j = 0; j < d; ++j) {
      double a = 0.0;
      for (std::size_t i = 0; i < n; ++i) a += h[i] * x(i, j) * x(i, j);
      col_h[j] = a;
    }
    for (int sweep = 0; sweep < 200; ++sweep) {
      double max_change = 0.0;
      {
        double grad = gb;
        for (std::size_t i = 0; i < n; ++i) grad += h[i] * (r[i] + db);
        const double step = -grad / hsum;
        db += step;
        max_change = std::max(max_change, std::abs(step));
      }
      for (std::size_t j = 0; j < d; ++j) {
        const double a = col_h[j];
        if (a <= 0.0 && !l1) continue;
        double grad = g[j];
        for (std::size_t i = 0; i < n; ++i) grad += h[i] * x(i, j) * (r[i] + db);
        const double z = beta[j] + delta[j];
        double z_new;
        if (l1) {
          z_new = a > 0.0 ? soft_threshold(a * z - grad, 1.0) / a : 0.0;
        } else {
          z_new = (a * z - grad) / (a + 1.0);
        }
        const double change = z_new - z;
        if (change != 0.0) {
          delta[j] += change;
          for (std::size_t i = 0; i < n; ++i) r[i] += change * x(i, j);
        }
        max_change = std::max(max_change, std::abs(change));
      }
      if (max_change < 1e-12) break;
    }

    // Backtracking on the full objective.
    double pen_old = penalty_value(params, beta);
    std::vector<double> trial(d);
    for (std::size_t j = 0; j < d; ++j) trial[j] = beta[j] + delta[j];
    double lin = gb * db + penalty_value(params, trial) - pen_old;
    for (std::size_t j = 0; j < d; ++j) lin += g[j] * delta[j];
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      for (std::size_t j = 0; j < d; ++j) trial[j] = beta[j] + t * delta[j];
      const double f_new = logreg_objective(x, y, weights, params, trial, bias + t * db);
      if (f_new <= f_cur + 1e-4 * t * std::min(lin, 0.0) || f_new <= f_cur) {
        if (f_new <= f_cur) {
          beta = trial;
          bias += t * db;
          f_cur = f_new;
          accepted = true;
        }
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      model.iterations = it + 1;
      break;
    }
    model.iterations = it + 1;
  }
  if (!model.converged) {
    // One final optimality check at the returned iterate.
    log_warning("logistic regression stopped after " + std::to_string(model.iterations) +
                " iterations without meeting the gradient tolerance");
  }
  for (double b : beta)
    if (!std::isfinite(b)) throw NumericError("logistic regression produced non-finite weights");
  model.weights = std::move(beta);
  model.bias = bias;
  model.objective = f_cur;
  return model;
}

nlohmann::json to_json(const LinearModel& m) {
  return {{"params", to_json(m.params)}, {"weights", m.weights},       {"bias", m.bias},
          {"converged", m.converged},    {"iterations", m.iterations}, {"objective", m.objective}};
}

LinearModel linear_from_json(const nlohmann::json& j) {
  LinearModel m;
  m.params = logreg_params_from_json(j.at("params"));
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  m.converged = j.value("converged", false);
  m.iterations = j.value("iterations", 0);
  m.objective = j.value("objective", 0.0);
  return m;
}

}  // namespace icurisk
