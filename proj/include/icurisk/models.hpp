#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "icurisk/gbdt.hpp"
#include "icurisk/linear.hpp"
#include "icurisk/matrix.hpp"
#include "icurisk/mlp.hpp"
#include "icurisk/naive_bayes.hpp"

namespace icurisk {

enum class ModelFamily { gbdt, logistic_regression, naive_bayes, mlp };

std::string to_string(ModelFamily f);
ModelFamily model_family_from_string(const std::string& s);

/// One hyperparameter configuration of one family. `params` holds the
/// family's parameter object as JSON; absent keys take defaults.
struct ModelSpec {
  std::string name;
  ModelFamily family = ModelFamily::gbdt;
  nlohmann::json params = nlohmann::json::object();

  /// Ordered-mode boosting encodes categorical columns itself, so the
  /// preprocessing pipeline must hand them over as raw codes.
  bool wants_raw_categoricals() const;
};

nlohmann::json to_json(const ModelSpec& s);
ModelSpec model_spec_from_json(const nlohmann::json& j);

struct TrainedModel {
  std::string name;
  std::size_t n_features = 0;
  std::variant<GbdtModel, LinearModel, GaussianNbModel, MlpModel> model;

  ModelFamily family() const;
  double margin(std::span<const double> row) const;
};

/// `categorical_columns` is only used by ordered-mode boosting.
TrainedModel train(const ModelSpec& spec, const Matrix& x, std::span<const int> y,
                   std::span<const double> weights, std::uint64_t seed,
                   std::span<const std::size_t> categorical_columns = {});

/// Raw scores (log-odds) per row.
std::vector<double> decision_function(const TrainedModel& m, const Matrix& x);
/// sigmoid(margin) clipped to [1e-7, 1 - 1e-7]. Throws SchemaError when the
/// column count differs from training.
std::vector<double> predict_proba(const TrainedModel& m, const Matrix& x);

nlohmann::json to_json(const TrainedModel& m);
TrainedModel trained_model_from_json(const nlohmann::json& j);

/// A named benchmark row together with its hyperparameter grid.
struct ModelEntry {
  std::string name;
  std::vector<ModelSpec> grid;
};

std::vector<ModelSpec> default_grid(ModelFamily family, const nlohmann::json& base = nlohmann::json::object());
/// The six benchmark rows: three boosted-tree variants (ordered target
/// statistics, row subsampling, exact greedy), then logistic regression,
/// Gaussian naive Bayes and the MLP.
std::vector<ModelEntry> default_model_entries();

nlohmann::json to_json(const ModelEntry& e);
ModelEntry model_entry_from_json(const nlohmann::json& j);

}  // namespace icurisk
