#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "icurisk/dataset.hpp"

namespace icurisk {

struct CoverageFilterConfig {
  double max_missing_fraction = 0.20;
  std::size_t min_documented_patients = 100;
  double min_variance = 0.0;
};

enum class DropReason { missingness, low_documentation, low_variance, near_zero_mi, below_top_k };
std::string to_string(DropReason r);

struct CoverageDecision {
  std::string feature;
  double missing_fraction = 0.0;
  std::size_t documented = 0;
  double variance = 0.0;  // population variance of observed values
  std::vector<DropReason> reasons;  // empty: kept
  bool kept() const { return reasons.empty(); }
};

struct CoverageReport {
  std::vector<std::string> kept;
  std::vector<CoverageDecision> decisions;  // one per input feature, schema order
};

/// Drops features with missing fraction above the limit, fewer documented
/// rows than the minimum, or observed variance <= min_variance. Every rule
/// that fires is recorded. Documented counts are raw cohort counts.
CoverageReport coverage_filter(const CohortTable& table, const CoverageFilterConfig& cfg);

/// Plug-in mutual information in nats between two discrete vectors.
double mutual_information(std::span<const int> x, std::span<const int> y);

/// Quantile cut points (deciles by default); equal quantiles collapse into
/// one bin. Value v falls in bin i = number of cuts strictly below v.
std::vector<double> quantile_cuts(std::vector<double> values, std::size_t n_bins = 10);
int bin_of(double v, std::span<const double> cuts);

struct SelectConfig {
  CoverageFilterConfig coverage;
  std::size_t n_bins = 10;
  double min_mi = 1e-3;  // nats
};

struct MIScore {
  std::string feature;
  double mi = 0.0;
  std::vector<double> cuts;  // empty for binary/categorical features
  std::size_t rank = 0;      // 1-based
  bool near_zero = false;
  bool selected = false;
};

struct MIRanking {
  std::vector<MIScore> scores;          // sorted by rank
  std::vector<std::string> selected;    // top-k among non-near-zero, rank order
  std::size_t n_bins = 10;
};

/// Ranks every feature of `table` by MI with the label (observed rows only;
/// continuous and ordinal features binned at quantiles). Ties go
/// alphabetically. Features with MI below `min_mi` are flagged; `top_k` is
/// clamped to the number of unflagged features.
MIRanking rank_features(const CohortTable& table, const SelectConfig& cfg, std::size_t top_k);

DropReason drop_reason_from_string(const std::string& s);

nlohmann::json to_json(const CoverageReport& r);
CoverageReport coverage_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MIRanking& r);
MIRanking mi_ranking_from_json(const nlohmann::json& j);

/// CSV with columns feature,mi,kept,reason.
std::string selection_report_csv(const CoverageReport& coverage, const MIRanking& ranking);

}  // namespace icurisk
