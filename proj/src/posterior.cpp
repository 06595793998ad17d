#include "icurisk/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "icurisk/error.hpp"
#include "icurisk/linear.hpp"
#include "icurisk/numeric.hpp"
#include "icurisk/rng.hpp"

namespace icurisk {

void summarize_risk(PosteriorRisk& risk) {
  if (risk.samples.empty()) throw NumericError("posterior has no samples");
  std::vector<double> s = risk.samples;
  std::sort(s.begin(), s.end());
  double sum = 0.0;
  for (double v : s) sum += v;
  risk.mean = sum / static_cast<double>(s.size());
  const double last = static_cast<double>(s.size() - 1);
  risk.low = s[static_cast<std::size_t>(std::floor(0.025 * last))];
  risk.high = s[static_cast<std::size_t>(std::ceil(0.975 * last))];
}

namespace {

std::vector<std::size_t> thinned_rows(std::size_t n, std::size_t max_samples) {
  const std::size_t step = std::max<std::size_t>(1, (n + max_samples - 1) / std::max<std::size_t>(max_samples, 1));
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < n; r += step) out.push_back(r);
  return out;
}

double truncated_normal(Rng& rng, double mu, double sd, double lo, double hi) {
  for (int tries = 0; tries < 10000; ++tries) {
    const double v = mu + sd * standard_normal(rng);
    if (v >= lo && v <= hi) return v;
  }
  return std::clamp(mu, lo, hi);
}

}  // namespace

PosteriorRisk posterior_risk_inputs(const FittedModel& model, std::span<const FeatureStats> moments,
                                    const PosteriorInputsConfig& config, Exec exec) {
  const Schema& schema = model.pipeline.schema;
  if (moments.size() != schema.size()) throw ConfigError("prior moments must cover every model feature");

  struct Sampled {
    std::size_t col;
    double mu, sd, lo, hi;
  };
  struct Discrete {
    std::size_t col;
    std::vector<double> values, probs;
  };
  std::vector<Sampled> sampled;
  std::vector<Discrete> discrete;
  std::vector<double> fixed(schema.size(), 0.0);

  for (std::size_t c = 0; c < schema.size(); ++c) {
    const auto& f = schema[c];
    const auto& m = moments[c];
    switch (f.kind) {
      case FeatureKind::binary: {
        if (!m.mean) throw ConfigError("no prior moments for '" + f.name + "'");
        const double p = std::clamp(*m.mean, 0.0, 1.0);
        discrete.push_back({c, {0.0, 1.0}, {1.0 - p, p}});
        break;
      }
      case FeatureKind::categorical: {
        Discrete dsc{c, {}, {}};
        const std::size_t L = f.levels.size();
        for (std::size_t l = 0; l < L; ++l) {
          dsc.values.push_back(static_cast<double>(l));
          dsc.probs.push_back(m.level_freq.size() == L ? m.level_freq[l] : 1.0 / static_cast<double>(L));
        }
        discrete.push_back(std::move(dsc));
        break;
      }
      default: {
        if (!m.mean || !m.sd) throw ConfigError("no prior moments for '" + f.name + "'");
        const double lo = f.lower.value_or(-std::numeric_limits<double>::infinity());
        const double hi = f.upper.value_or(std::numeric_limits<double>::infinity());
        if (*m.sd > 0.0)
          sampled.push_back({c, *m.mean, *m.sd, lo, hi});
        else
          fixed[c] = std::clamp(*m.mean, lo, hi);
      }
    }
  }

  std::size_t n_comb = 1;
  for (const auto& dsc : discrete) {
    n_comb *= dsc.values.size();
    if (n_comb > config.max_combinations) throw ConfigError("too many discrete combinations to enumerate");
  }

  PosteriorRisk risk;
  Matrix draws;
  if (!sampled.empty()) {
    const std::size_t d = sampled.size();
    LogDensity logp = [&sampled](std::span<const double> x) {
      double s = 0.0;
      for (std::size_t k = 0; k < sampled.size(); ++k) {
        const auto& p = sampled[k];
        if (x[k] < p.lo || x[k] > p.hi) return -std::numeric_limits<double>::infinity();
        const double z = (x[k] - p.mu) / p.sd;
        s -= 0.5 * z * z;
      }
      return s;
    };
    Matrix init(config.dream.n_chains, d);
    Rng rng = make_rng(config.dream.seed, 0xfeedULL);
    for (std::size_t i = 0; i < init.rows(); ++i)
      for (std::size_t k = 0; k < d; ++k)
        init(i, k) = truncated_normal(rng, sampled[k].mu, sampled[k].sd, sampled[k].lo, sampled[k].hi);
    const DreamResult res = dream_sample(logp, init, config.dream, exec);
    risk.acceptance_rate = res.acceptance_rate;
    risk.rhat = res.rhat;
    const Matrix pooled = res.pooled();
    draws = pooled.select_rows(thinned_rows(pooled.rows(), config.max_samples));
  } else {
    draws = Matrix(1, 0);
    risk.note = "no continuous features; discrete enumeration only";
  }

  // One table row per (draw, combination); risks are mixed by combination weight.
  std::vector<Cell> cells;
  cells.reserve(draws.rows() * n_comb * schema.size());
  std::vector<double> comb_weight(n_comb, 1.0);
  for (std::size_t r = 0; r < draws.rows(); ++r) {
    for (std::size_t cb = 0; cb < n_comb; ++cb) {
      std::vector<double> row = fixed;
      for (std::size_t k = 0; k < sampled.size(); ++k) row[sampled[k].col] = draws(r, k);
      std::size_t rem = cb;
      double w = 1.0;
      for (const auto& dsc : discrete) {
        const std::size_t l = rem % dsc.values.size();
        rem /= dsc.values.size();
        row[dsc.col] = dsc.values[l];
        w *= dsc.probs[l];
      }
      if (r == 0) comb_weight[cb] = w;
      for (double v : row) cells.emplace_back(v);
    }
  }
  const CohortTable table(schema, std::move(cells), std::vector<int>(draws.rows() * n_comb, 0));
  const auto p = model.predict_proba(table, exec);
  risk.samples.resize(draws.rows());
  for (std::size_t r = 0; r < draws.rows(); ++r) {
    double s = 0.0;
    for (std::size_t cb = 0; cb < n_comb; ++cb) s += comb_weight[cb] * p[r * n_comb + cb];
    risk.samples[r] = s;
  }
  summarize_risk(risk);
  for (double rh : risk.rhat)
    if (!(rh < 1.2)) risk.reliable = false;
  if (!risk.reliable) risk.note = "split-R-hat above 1.2";
  return risk;
}

PosteriorRisk posterior_risk_params(const Matrix& x, std::span<const int> y, std::span<const double> row,
                                    const PosteriorParamsConfig& config, Exec exec) {
  const std::size_t n = x.rows(), d = x.cols();
  if (y.size() != n) throw ConfigError("labels length mismatch");
  if (row.size() != d) throw SchemaError("query row width differs from the training matrix");
  if (!(config.prior_sd > 0.0)) throw ConfigError("prior_sd must be > 0");

  const double inv_var = 1.0 / (config.prior_sd * config.prior_sd);
  LogDensity logp = [&](std::span<const double> theta) {
    double s = 0.0;
    for (std::size_t k = 0; k <= d; ++k) s -= 0.5 * theta[k] * theta[k] * inv_var;
    for (std::size_t i = 0; i < n; ++i) {
      double m = theta[0];
      auto xi = x.row(i);
      for (std::size_t k = 0; k < d; ++k) m += theta[k + 1] * xi[k];
      s -= logistic_loss(m, y[i]);
    }
    return s;
  };

  // MAP start: the L2 problem C * sum(loss) + 0.5 * ||beta||^2 with
  // C = prior_sd^2 matches the prior on the coefficients.
  LogregParams lp;
  lp.penalty = Penalty::l2;
  lp.C = config.prior_sd * config.prior_sd;
  lp.max_iter = 200;
  const std::vector<double> ones(n, 1.0);
  const LinearModel map = train_logreg(x, y, ones, lp);

  Matrix init(config.dream.n_chains, d + 1);
  Rng rng = make_rng(config.dream.seed, 0xbeefULL);
  for (std::size_t i = 0; i < init.rows(); ++i) {
    init(i, 0) = map.bias + config.init_sd * standard_normal(rng);
    for (std::size_t k = 0; k < d; ++k) init(i, k + 1) = map.weights[k] + config.init_sd * standard_normal(rng);
  }
  const DreamResult res = dream_sample(logp, init, config.dream, exec);

  PosteriorRisk risk;
  risk.acceptance_rate = res.acceptance_rate;
  risk.rhat = res.rhat;
  const Matrix pooled = res.pooled();
  risk.samples.resize(pooled.rows());
  for (std::size_t r = 0; r < pooled.rows(); ++r) {
    double m = pooled(r, 0);
    for (std::size_t k = 0; k < d; ++k) m += pooled(r, k + 1) * row[k];
    risk.samples[r] = clip_probability(sigmoid(m));
  }
  summarize_risk(risk);
  for (double rh : risk.rhat)
    if (!(rh <= config.rhat_limit)) risk.reliable = false;
  if (!risk.reliable) risk.note = "split-R-hat above " + std::to_string(config.rhat_limit) + "; unreliable";
  return risk;
}

nlohmann::json to_json(const PosteriorRisk& r) {
  nlohmann::json rhat = nlohmann::json::array();
  for (double v : r.rhat) rhat.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
  return {{"mean", r.mean},       {"low", r.low},
          {"high", r.high},       {"acceptance_rate", r.acceptance_rate},
          {"rhat", rhat},         {"reliable", r.reliable},
          {"note", r.note},       {"samples", r.samples}};
}

PosteriorRisk posterior_risk_from_json(const nlohmann::json& j) {
  PosteriorRisk r;
  r.mean = j.at("mean").get<double>();
  r.low = j.at("low").get<double>();
  r.high = j.at("high").get<double>();
  r.acceptance_rate = j.at("acceptance_rate").get<double>();
  for (const auto& v : j.at("rhat"))
    r.rhat.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
  r.reliable = j.at("reliable").get<bool>();
  r.note = j.value("note", std::string());
  r.samples = j.at("samples").get<std::vector<double>>();
  return r;
}

}  // namespace icurisk
