#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "icurisk/matrix.hpp"
#include "icurisk/parallel.hpp"

namespace icurisk {

using LogDensity = std::function<double(std::span<const double>)>;

struct DreamConfig {
  std::size_t n_chains = 8;
  std::size_t n_generations = 20000;
  double burn_in = 0.5;
  /// Keep every `thin`-th post-burn-in generation.
  std::size_t thin = 1;
  /// Crossover probabilities, drawn uniformly per proposal.
  std::vector<double> crossover{1.0 / 3.0, 2.0 / 3.0, 1.0};
  /// Fraction of proposals that use gamma = 1 (mode jumping).
  double jump_probability = 0.1;
  double e_scale = 0.05;   // multiplicative jitter, U(-e, e)
  double eps_sd = 1e-6;    // additive jitter, N(0, eps_sd^2)
  /// Generations without any accepted move that trigger a warning.
  std::size_t stall_window = 1000;
  std::uint64_t seed = 0;

  bool operator==(const DreamConfig&) const = default;
};

nlohmann::json to_json(const DreamConfig& c);
/// Keys absent from `j` keep their value from `base`.
DreamConfig dream_config_from_json(const nlohmann::json& j, const DreamConfig& base = {});

struct DreamResult {
  std::size_t dim = 0;
  /// One matrix per chain: retained generations x dim.
  std::vector<Matrix> chains;
  double acceptance_rate = 0.0;   // over all generations
  std::vector<double> rhat;       // split-R-hat per dimension, retained draws
  std::size_t stalled_windows = 0;

  /// All retained draws, chain after chain.
  Matrix pooled() const;
};

/// min(1, exp(logp_new - logp_old)).
double metropolis_accept_prob(double logp_old, double logp_new);

/// Split-R-hat of one dimension over chains of equal length.
double split_rhat(const std::vector<std::vector<double>>& chains);

/// Lock-step differential-evolution Metropolis. Chain i proposes
/// x_i + (1 + e) * gamma * (x_a - x_b) + eps on a crossover subset of
/// dimensions, with a, b distinct other chains taken from the previous
/// generation and gamma = 2.38 / sqrt(2 d') over the d' updated dimensions.
/// Each chain owns its random stream, so serial and parallel runs agree.
DreamResult dream_sample(const LogDensity& log_density, const Matrix& initial, const DreamConfig& config,
                         Exec exec = Exec::parallel);

}  // namespace icurisk
