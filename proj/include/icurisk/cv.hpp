#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "icurisk/dataset.hpp"
#include "icurisk/models.hpp"
#include "icurisk/parallel.hpp"
#include "icurisk/preprocess.hpp"

namespace icurisk {

/// Validation rows of each fold, as indices into the table being split.
struct CvPlan {
  std::vector<std::vector<std::size_t>> folds;
  std::uint64_t seed = 0;

  std::vector<std::size_t> training_rows(std::size_t fold, std::size_t n) const;
};

/// Each class is shuffled with its own seeded stream and dealt round-robin,
/// continuing across classes, so fold sizes differ by at most one and each
/// fold's class counts differ from the ideal share by less than one.
CvPlan stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed);

/// A frozen preprocessing pipeline plus the model trained on its output.
struct FittedModel {
  FittedPipeline pipeline;
  TrainedModel model;

  std::vector<double> predict_proba(const CohortTable& table, Exec exec = Exec::parallel) const;
};

nlohmann::json to_json(const FittedModel& m);
FittedModel fitted_model_from_json(const nlohmann::json& j);

/// Fits the pipeline on `train` (raw categorical codes when the model asks
/// for them) and trains the model with class weights from `train`.
FittedModel fit_model(const CohortTable& train, const ModelSpec& spec, const PipelineConfig& pipeline,
                      std::uint64_t seed, Exec exec = Exec::parallel);

struct ConfigScore {
  ModelSpec spec;
  std::vector<double> fold_auroc;
  double mean_auroc = 0.0;
  double sd_auroc = 0.0;  // sample sd over folds
};

struct GridSearchResult {
  std::string name;
  std::vector<ConfigScore> configs;
  std::size_t best = 0;
  /// Out-of-fold probabilities of the winning config, indexed like the input table.
  std::vector<double> oof_scores;

  const ModelSpec& best_spec() const { return configs[best].spec; }
};

/// Preprocessing is refitted inside every fold. Task (fold f, config c) uses
/// seed derive_seed(derive_seed(seed, f), c). Winner: highest mean AUROC,
/// ties to the smaller config index.
GridSearchResult cross_validate(const CohortTable& train, std::span<const ModelSpec> grid,
                                const PipelineConfig& pipeline, std::size_t k, std::uint64_t seed,
                                Exec exec = Exec::parallel);

nlohmann::json to_json(const GridSearchResult& r);
GridSearchResult grid_search_from_json(const nlohmann::json& j);

}  // namespace icurisk
