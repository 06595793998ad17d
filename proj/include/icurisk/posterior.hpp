#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "icurisk/cv.hpp"
#include "icurisk/dataset.hpp"
#include "icurisk/dream.hpp"

namespace icurisk {

struct PosteriorRisk {
  std::vector<double> samples;  // predicted mortality probabilities
  double mean = 0.0;
  double low = 0.0;   // 2.5% order statistic
  double high = 0.0;  // 97.5% order statistic
  double acceptance_rate = 0.0;
  std::vector<double> rhat;
  bool reliable = true;
  std::string note;
};

/// Mean and central 95% bounds of `samples`. Computed on the sorted
/// sample, so the result does not depend on how chains were pooled.
void summarize_risk(PosteriorRisk& risk);

struct PosteriorInputsConfig {
  DreamConfig dream;
  /// Retained draws are thinned to at most this many before prediction.
  std::size_t max_samples = 4000;
  /// Upper bound on enumerated discrete combinations.
  std::size_t max_combinations = 4096;
};

/// Samples feature vectors from independent per-feature priors built from
/// `moments` (typically non-survivor statistics of the training data):
/// truncated Gaussians for continuous and ordinal features (sampled by
/// DREAM), and exact enumeration over binary and categorical levels, whose
/// predicted risks are averaged with their marginal probabilities.
PosteriorRisk posterior_risk_inputs(const FittedModel& model, std::span<const FeatureStats> moments,
                                    const PosteriorInputsConfig& config, Exec exec = Exec::parallel);

struct PosteriorParamsConfig {
  DreamConfig dream;
  double prior_sd = 2.5;
  /// Chains start at the penalized maximum-likelihood estimate plus
  /// N(0, init_sd^2) noise.
  double init_sd = 0.1;
  double rhat_limit = 1.2;
};

/// Posterior predictive distribution of sigmoid(b + beta . row) under a
/// logistic likelihood on (x, y) and independent N(0, prior_sd^2) priors on
/// the intercept and coefficients.
PosteriorRisk posterior_risk_params(const Matrix& x, std::span<const int> y, std::span<const double> row,
                                    const PosteriorParamsConfig& config, Exec exec = Exec::parallel);

nlohmann::json to_json(const PosteriorRisk& r);
PosteriorRisk posterior_risk_from_json(const nlohmann::json& j);

}  // namespace icurisk
