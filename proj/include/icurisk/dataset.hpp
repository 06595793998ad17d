#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "icurisk/matrix.hpp"

namespace icurisk {

enum class FeatureKind { continuous, binary, ordinal_score, categorical };

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& s);

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::continuous;
  std::string unit;
  // Physiologic bounds for continuous features, declared range for ordinal
  // scores. Generated values never leave [lower, upper].
  std::optional<double> lower;
  std::optional<double> upper;
  // Level names for categorical features; CSV strings map to their index.
  std::vector<std::string> levels;

  bool operator==(const FeatureSpec&) const = default;
};

using Schema = std::vector<FeatureSpec>;

/// Throws SchemaError on duplicate names, missing ranges on ordinal scores or
/// categorical features without levels.
void validate_schema(const Schema& schema);
std::optional<std::size_t> find_feature(const Schema& schema, const std::string& name);

Schema schema_from_json(const nlohmann::json& j);
nlohmann::json schema_to_json(const Schema& schema);
Schema load_schema(const std::filesystem::path& path);
void save_schema(const Schema& schema, const std::filesystem::path& path);

/// The 17 predictors retained for the hypertension + atrial fibrillation
/// cohort, with units and physiologic bounds.
Schema default_schema();

using Cell = std::optional<double>;

/// n x d table of optional values plus the binary outcome
/// (1 = died within 30 days).
class CohortTable {
 public:
  CohortTable() = default;
  CohortTable(Schema schema, std::vector<Cell> cells, std::vector<int> labels);

  const Schema& schema() const noexcept { return schema_; }
  std::size_t rows() const noexcept { return labels_.size(); }
  std::size_t cols() const noexcept { return schema_.size(); }

  const Cell& at(std::size_t r, std::size_t c) const { return cells_[r * cols() + c]; }
  Cell& at(std::size_t r, std::size_t c) { return cells_[r * cols() + c]; }
  std::span<const Cell> row(std::size_t r) const { return {cells_.data() + r * cols(), cols()}; }

  const std::vector<int>& labels() const noexcept { return labels_; }
  std::vector<int>& labels() noexcept { return labels_; }
  const std::vector<Cell>& cells() const noexcept { return cells_; }

  std::size_t missing_count() const;
  std::size_t positives() const;
  double event_rate() const;

  CohortTable subset(std::span<const std::size_t> rows) const;
  CohortTable select_features(std::span<const std::string> names) const;
  CohortTable drop_feature(const std::string& name) const;

  /// Dense copy; throws OrderingError if any cell is missing.
  Matrix to_matrix() const;
  /// Table with every cell present, wrapping a dense matrix.
  static CohortTable from_matrix(Schema schema, const Matrix& x, std::vector<int> labels);

  bool operator==(const CohortTable&) const = default;

 private:
  Schema schema_;
  std::vector<Cell> cells_;
  std::vector<int> labels_;
};

/// Reads a CSV whose header is the schema's feature names plus `label`
/// (any column order). Empty cells are missing; categorical cells hold level
/// names or integer codes.
CohortTable load_cohort(const std::filesystem::path& path, const Schema& schema);
CohortTable parse_cohort(std::istream& in, const Schema& schema);
void save_cohort(const CohortTable& table, const std::filesystem::path& path);
void write_cohort(const CohortTable& table, std::ostream& out);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

struct SplitIndex {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  std::uint64_t seed = 0;

  bool operator==(const SplitIndex&) const = default;
};

nlohmann::json split_to_json(const SplitIndex& split);
SplitIndex split_from_json(const nlohmann::json& j);

/// Per-class shuffles; each class contributes round-half-up(count * fraction)
/// rows to train. Both parts come back sorted by row index.
SplitIndex stratified_split(const CohortTable& table, double train_fraction, std::uint64_t seed);
SplitIndex stratified_split(std::span<const int> labels, double train_fraction, std::uint64_t seed);

struct FeatureStats {
  std::optional<double> mean;
  std::optional<double> sd;  // sample sd (n - 1)
  double missing_fraction = 0.0;
  std::size_t documented = 0;
  // Categorical only: frequency of each level among documented rows.
  std::vector<double> level_freq;
};

/// Moments per feature, overall and (when split by label) per class.
struct CohortSummary {
  Schema schema;
  std::vector<FeatureStats> overall;
  std::vector<FeatureStats> survivors;      // label 0
  std::vector<FeatureStats> nonsurvivors;   // label 1
  double event_rate = 0.0;
  std::size_t n = 0;

  const std::vector<FeatureStats>& for_class(int label) const {
    return label == 1 ? nonsurvivors : survivors;
  }
};

CohortSummary summarize(const CohortTable& table, bool by_label);
FeatureStats column_stats(const CohortTable& table, std::size_t col,
                          std::optional<int> label_filter = std::nullopt);

/// Survivor / non-survivor moments for the default schema, with the cohort
/// event rate of 0.196.
CohortSummary default_class_moments();

/// Labels ~ Bernoulli(event_rate); continuous and ordinal features drawn from
/// class-conditional Gaussians truncated to the schema bounds; binary
/// features ~ Bernoulli(class mean); categorical features from per-class level
/// frequencies; then MCAR missingness per feature. Features are independent
/// given the label.
CohortTable synth_cohort(const CohortSummary& summary, std::size_t n, double event_rate,
                         std::span<const double> missing_rates, std::uint64_t seed);

}  // namespace icurisk
