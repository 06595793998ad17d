#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "icurisk/dataset.hpp"
#include "icurisk/parallel.hpp"

namespace icurisk {

// ---------------------------------------------------------------------------
// KNN imputation

/// Fills a missing cell with the mean of that feature over the k nearest
/// training rows that observe it. Distance: squared z-scored differences over
/// the dimensions both rows observe, divided by the number of such
/// dimensions. Candidates are ordered by (distance, candidate value, row
/// index), which makes the result independent of training-row order. With
/// fewer than k eligible rows all of them are used; with none, the training
/// mean. Categorical features take the most frequent level among the
/// neighbours instead of the mean.
struct KnnImputer {
  std::size_t k = 5;
  CohortTable reference;
  std::vector<std::optional<double>> fallback_means;
  std::vector<double> dist_mean;
  std::vector<double> dist_sd;
};

KnnImputer fit_imputer(const CohortTable& train, std::size_t k);
CohortTable impute(const KnnImputer& imputer, const CohortTable& table, Exec exec = Exec::parallel);

// ---------------------------------------------------------------------------
// Smoothed target encoding

struct CategoryStats {
  std::size_t count = 0;
  double mean = 0.0;
};

struct TargetEncoder {
  std::string feature;
  double alpha = 10.0;
  double global_mean = 0.0;
  std::map<double, CategoryStats> categories;

  /// (n_c * mean_c + alpha * global_mean) / (n_c + alpha); unseen -> global mean.
  double encode_value(double category) const;
};

TargetEncoder fit_encoder(const CohortTable& train, const std::string& feature, double alpha);
/// Replaces the encoder's column. Never reads the labels of `table`.
CohortTable encode(const TargetEncoder& encoder, const CohortTable& table);

// ---------------------------------------------------------------------------
// z-score scaling

struct StandardScaler {
  std::vector<double> mean;
  std::vector<double> sd;     // population sd
  std::vector<bool> active;   // false: column passes through unchanged
};

/// Scales every non-binary feature unless `active` is supplied.
StandardScaler fit_scaler(const CohortTable& train, std::vector<bool> active = {});
CohortTable scale(const StandardScaler& scaler, const CohortTable& table);

// ---------------------------------------------------------------------------
// Class weights

struct ClassWeights {
  double w0 = 1.0;
  double w1 = 1.0;

  double operator()(int label) const noexcept { return label == 1 ? w1 : w0; }
  std::vector<double> per_sample(std::span<const int> labels) const;
};

/// w_y = 1 / f_y with f_y the class frequency in `labels`.
ClassWeights class_weights(std::span<const int> labels);

// ---------------------------------------------------------------------------
// Pipeline

struct PipelineConfig {
  std::size_t knn_k = 5;
  double alpha = 10.0;
  /// Leave categorical columns as raw level codes (neither encoded nor
  /// scaled) for learners that encode them internally.
  bool passthrough_categorical = false;
};

nlohmann::json to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

/// Imputer -> encoders -> scaler, frozen after fitting on a training fold.
struct FittedPipeline {
  PipelineConfig config;
  Schema schema;
  KnnImputer imputer;
  std::vector<TargetEncoder> encoders;
  StandardScaler scaler;
  ClassWeights weights;
  std::vector<std::size_t> provenance;  // training-fold row indices, if known
};

FittedPipeline fit_pipeline(const CohortTable& train, const PipelineConfig& config,
                            std::vector<std::size_t> provenance = {});
CohortTable apply(const FittedPipeline& pipeline, const CohortTable& table, Exec exec = Exec::parallel);
Matrix apply_matrix(const FittedPipeline& pipeline, const CohortTable& table, Exec exec = Exec::parallel);
/// Indices of columns left as raw categorical codes by the pipeline.
std::vector<std::size_t> passthrough_columns(const FittedPipeline& pipeline);

nlohmann::json to_json(const FittedPipeline& pipeline);
FittedPipeline pipeline_from_json(const nlohmann::json& j);

}  // namespace icurisk
