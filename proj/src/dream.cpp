#include "icurisk/dream.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "icurisk/error.hpp"
#include "icurisk/log.hpp"
#include "icurisk/rng.hpp"

namespace icurisk {

nlohmann::json to_json(const DreamConfig& c) {
  return {{"n_chains", c.n_chains},
          {"n_generations", c.n_generations},
          {"burn_in", c.burn_in},
          {"thin", c.thin},
          {"crossover", c.crossover},
          {"jump_probability", c.jump_probability},
          {"e_scale", c.e_scale},
          {"eps_sd", c.eps_sd},
          {"stall_window", c.stall_window},
          {"seed", c.seed}};
}

DreamConfig dream_config_from_json(const nlohmann::json& j, const DreamConfig& base) {
  DreamConfig c = base;
  c.n_chains = j.value("n_chains", c.n_chains);
  c.n_generations = j.value("n_generations", c.n_generations);
  c.burn_in = j.value("burn_in", c.burn_in);
  c.thin = j.value("thin", c.thin);
  c.crossover = j.value("crossover", c.crossover);
  c.jump_probability = j.value("jump_probability", c.jump_probability);
  c.e_scale = j.value("e_scale", c.e_scale);
  c.eps_sd = j.value("eps_sd", c.eps_sd);
  c.stall_window = j.value("stall_window", c.stall_window);
  c.seed = j.value("seed", c.seed);
  return c;
}

Matrix DreamResult::pooled() const {
  std::size_t rows = 0;
  for (const auto& c : chains) rows += c.rows();
  Matrix out(rows, dim);
  std::size_t r = 0;
  for (const auto& c : chains)
    for (std::size_t i = 0; i < c.rows(); ++i, ++r) std::copy(c.row(i).begin(), c.row(i).end(), out.row(r).begin());
  return out;
}

double metropolis_accept_prob(double logp_old, double logp_new) {
  if (std::isnan(logp_new)) return 0.0;
  const double delta = logp_new - logp_old;
  return delta >= 0.0 ? 1.0 : std::exp(delta);
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    if (h < 2) continue;
    halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(h));
    halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(h), c.end());
  }
  if (halves.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(halves.front().size());
  const double m = static_cast<double>(halves.size());
  std::vector<double> means, vars;
  for (const auto& h : halves) {
    double mean = 0.0;
    for (double v : h) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : h) ss += (v - mean) * (v - mean);
    means.push_back(mean);
    vars.push_back(ss / (n - 1.0));
  }
  double grand = 0.0, W = 0.0;
  for (std::size_t i = 0; i < halves.size(); ++i) {
    grand += means[i];
    W += vars[i];
  }
  grand /= m;
  W /= m;
  double B = 0.0;
  for (double mu : means) B += (mu - grand) * (mu - grand);
  B *= n / (m - 1.0);
  if (W == 0.0) return B == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * W + B / n;
  return std::sqrt(var_plus / W);
}

DreamResult dream_sample(const LogDensity& log_density, const Matrix& initial, const DreamConfig& cfg,
                         Exec exec) {
  const std::size_t N = initial.rows(), d = initial.cols();
  if (N < 3) throw ConfigError("DREAM needs at least 3 chains");
  if (N != cfg.n_chains) throw ConfigError("initial states must have one row per chain");
  if (d == 0) throw ConfigError("DREAM needs at least one dimension");
  if (cfg.burn_in < 0.0 || cfg.burn_in >= 1.0) throw ConfigError("burn_in must be in [0,1)");
  if (cfg.thin < 1 || cfg.n_generations < 2) throw ConfigError("invalid DREAM generation settings");
  if (cfg.crossover.empty()) throw ConfigError("DREAM needs crossover probabilities");
  if (N < 2 * d)
    log_warning("DREAM with " + std::to_string(N) + " chains in " + std::to_string(d) +
                " dimensions; at least " + std::to_string(2 * d) + " are recommended");

  Matrix state = initial;
  std::vector<double> logp(N);
  for (std::size_t i = 0; i < N; ++i) {
    logp[i] = log_density(state.row(i));
    if (!std::isfinite(logp[i])) throw NumericError("log density is not finite at an initial state");
  }
  std::vector<Rng> rng;
  for (std::size_t i = 0; i < N; ++i) rng.push_back(make_rng(cfg.seed, i));

  const auto first_kept = static_cast<std::size_t>(std::floor(cfg.burn_in * static_cast<double>(cfg.n_generations)));
  DreamResult res;
  res.dim = d;
  std::vector<std::vector<double>> kept(N);
  std::vector<std::size_t> accepted(N, 0);
  std::size_t window_accepts = 0, window_len = 0;
  std::vector<unsigned char> moved(N);

  auto step_chain = [&](std::size_t i, const Matrix& prev) {
    Rng& g = rng[i];
    std::size_t a = uniform_index(g, N - 1);
    if (a >= i) ++a;
    std::size_t b = uniform_index(g, N - 2);
    for (std::size_t skip : {std::min(i, a), std::max(i, a)})
      if (b >= skip) ++b;
    const double cr = cfg.crossover[uniform_index(g, cfg.crossover.size())];
    std::vector<unsigned char> upd(d, 0);
    std::size_t n_upd = 0;
    for (std::size_t j = 0; j < d; ++j)
      if (uniform01(g) < cr) {
        upd[j] = 1;
        ++n_upd;
      }
    if (n_upd == 0) {
      upd[uniform_index(g, d)] = 1;
      n_upd = 1;
    }
    const double gamma = uniform01(g) < cfg.jump_probability
                             ? 1.0
                             : 2.38 / std::sqrt(2.0 * static_cast<double>(n_upd));
    std::vector<double> prop(prev.row(i).begin(), prev.row(i).end());
    for (std::size_t j = 0; j < d; ++j) {
      if (!upd[j]) continue;
      const double e = cfg.e_scale * (2.0 * uniform01(g) - 1.0);
      const double eps = cfg.eps_sd * standard_normal(g);
      prop[j] += (1.0 + e) * gamma * (prev(a, j) - prev(b, j)) + eps;
    }
    const double lp = log_density(prop);
    const double u = uniform01(g);
    moved[i] = 0;
    if (u < metropolis_accept_prob(logp[i], lp)) {
      std::copy(prop.begin(), prop.end(), state.row(i).begin());
      logp[i] = lp;
      moved[i] = 1;
    }
  };

  for (std::size_t gen = 0; gen < cfg.n_generations; ++gen) {
    const Matrix prev = state;
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) step_chain(static_cast<std::size_t>(i), prev);
    } else {
      for (std::size_t i = 0; i < N; ++i) step_chain(i, prev);
    }
    for (std::size_t i = 0; i < N; ++i) {
      accepted[i] += moved[i];
      window_accepts += moved[i];
    }
    if (++window_len == cfg.stall_window) {
      if (window_accepts == 0) {
        ++res.stalled_windows;
        log_warning("DREAM: no proposal accepted during generations " + std::to_string(gen + 1 - window_len) +
                    ".." + std::to_string(gen));
      }
      window_accepts = 0;
      window_len = 0;
    }
    if (gen >= first_kept && (gen - first_kept) % cfg.thin == 0)
      for (std::size_t i = 0; i < N; ++i) kept[i].insert(kept[i].end(), state.row(i).begin(), state.row(i).end());
  }

  std::size_t total = 0;
  for (auto a : accepted) total += a;
  res.acceptance_rate = static_cast<double>(total) / static_cast<double>(N * cfg.n_generations);
  for (std::size_t i = 0; i < N; ++i) res.chains.emplace_back(kept[i].size() / d, d, std::move(kept[i]));
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<std::vector<double>> per_chain(N);
    for (std::size_t i = 0; i < N; ++i) per_chain[i] = res.chains[i].column(j);
    res.rhat.push_back(split_rhat(per_chain));
  }
  return res;
}

}  // namespace icurisk
