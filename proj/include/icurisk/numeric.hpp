#pragma once

#include <algorithm>
#include <cmath>

namespace icurisk {

inline constexpr double kProbFloor = 1e-7;

inline double sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

/// log(1 + exp(m)) without overflow.
inline double log1pexp(double m) {
  return m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
}

/// Negative log-likelihood of label y under margin m.
inline double logistic_loss(double m, int y) { return log1pexp(m) - (y == 1 ? m : 0.0); }

inline double clip_probability(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace icurisk
