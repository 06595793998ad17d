#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "icurisk/dataset.hpp"
#include "icurisk/parallel.hpp"

namespace icurisk {

/// Mann-Whitney estimate (concordant + 0.5 * tied) / (n1 * n0) via mid-ranks.
/// Throws DataError unless both classes are present.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Direct O(n1 * n0) pairwise count; reference for `auroc`.
double auroc_pairwise(std::span<const double> scores, std::span<const int> labels);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Percentile interval (2.5%, 97.5%) of B stratified bootstrap AUROCs.
/// Replicate b draws from stream derive_seed(seed, b), so both execution
/// paths return identical results.
Interval bootstrap_auroc_ci(std::span<const double> scores, std::span<const int> labels, int B,
                            std::uint64_t seed, Exec exec = Exec::parallel);

/// The B replicate AUROCs themselves, in replicate order.
std::vector<double> bootstrap_auroc(std::span<const double> scores, std::span<const int> labels,
                                    int B, std::uint64_t seed, Exec exec = Exec::parallel);

/// Percentile with linear interpolation between order statistics.
double percentile(std::vector<double> values, double q);

struct ThresholdPolicy {
  enum class Kind { youden, sensitivity_floor } kind = Kind::youden;
  double min_sensitivity = 0.8;
};

nlohmann::json to_json(const ThresholdPolicy& p);
ThresholdPolicy threshold_policy_from_json(const nlohmann::json& j);

/// Candidates are the lowest score (everything positive) and the midpoints
/// between consecutive distinct scores. Youden: maximize
/// sens + spec - 1, ties to the lower threshold. Sensitivity floor: the
/// highest threshold whose sensitivity reaches the floor.
double tune_threshold(std::span<const double> scores, std::span<const int> labels,
                      const ThresholdPolicy& policy = {});

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Rates are empty when their denominator is zero.
struct MetricReport {
  std::string model;
  std::optional<double> auroc;
  std::optional<double> auroc_ci_low;
  std::optional<double> auroc_ci_high;
  double threshold = 0.5;
  ConfusionCounts counts;
  std::optional<double> accuracy, f1, sensitivity, specificity, ppv, npv;
};

/// A row is predicted positive when score >= threshold.
ConfusionCounts confusion_counts(std::span<const double> scores, std::span<const int> labels,
                                 double threshold);
MetricReport metrics_from_counts(const ConfusionCounts& c);
MetricReport confusion_metrics(std::span<const double> scores, std::span<const int> labels,
                               double threshold);

nlohmann::json to_json(const MetricReport& r);
MetricReport metric_report_from_json(const nlohmann::json& j);
/// Header plus one row per report; metric columns follow the MetricReport fields.
std::string metrics_csv(std::span<const MetricReport> reports);

struct RocPoint {
  double fpr, tpr, threshold;
};

/// One point per distinct score (descending), starting at (0, 0, +inf).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);

// ---------------------------------------------------------------------------
// Welch t-test

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);
/// Two-sided p-value of Student's t with `df` degrees of freedom.
double student_t_two_sided(double t, double df);

WelchResult welch_t(double m1, double s1, double n1, double m2, double s2, double n2);

struct CohortComparison {
  std::string feature;
  std::size_t n1 = 0, n2 = 0;
  std::optional<double> mean1, sd1, mean2, sd2;
  std::optional<WelchResult> result;  // empty when a group has < 2 values
  std::string note;
};

std::vector<CohortComparison> compare_cohorts(const CohortTable& a, const CohortTable& b);

nlohmann::json to_json(const CohortComparison& c);
CohortComparison cohort_comparison_from_json(const nlohmann::json& j);
std::string cohort_ttest_csv(std::span<const CohortComparison> rows);

}  // namespace icurisk
