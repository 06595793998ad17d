#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "icurisk/dataset.hpp"
#include "icurisk/metrics.hpp"
#include "icurisk/models.hpp"
#include "icurisk/posterior.hpp"
#include "icurisk/preprocess.hpp"
#include "icurisk/select.hpp"

namespace icurisk {

struct SynthConfig {
  std::size_t n = 1301;
  double event_rate = 0.196;
  double default_missing_rate = 0.05;
  std::map<std::string, double> missing_rates;  // per-feature overrides
  /// Append features the selection stage is expected to reject.
  bool decoys = true;
};

/// Parameter-posterior defaults: 2(d+1) chains for the 17-feature model.
inline PosteriorParamsConfig default_posterior_params() {
  PosteriorParamsConfig p;
  p.dream.n_chains = 36;
  p.dream.n_generations = 3000;
  return p;
}

/// Input-posterior defaults: 2d chains for the 17-feature model.
inline PosteriorInputsConfig default_posterior_inputs() {
  PosteriorInputsConfig p;
  p.dream.n_chains = 34;
  return p;
}

struct ExplainConfig {
  bool enabled = true;
  /// Boosted-tree row used for attributions and effects; "auto" picks the
  /// boosted-tree variant with the best cross-validated AUROC.
  std::string model = "auto";
  std::string ablation_model = "auto";
  std::size_t shap_background = 256;
  std::size_t ale_bins = 20;
  int ablation_bootstrap = 500;
  PosteriorInputsConfig posterior_inputs = default_posterior_inputs();
  bool posterior_params_enabled = true;
  PosteriorParamsConfig posterior_params = default_posterior_params();
  /// Test-set row whose predictive distribution is sampled.
  std::size_t posterior_row = 0;
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> cohort_path;  // absent: synthesize
  std::optional<std::filesystem::path> schema_path;  // absent: built-in schema
  SynthConfig synth;
  double train_fraction = 0.7;
  PipelineConfig preprocess;
  SelectConfig selection;
  std::size_t top_k = 17;
  std::size_t cv_folds = 5;
  std::vector<ModelEntry> models = default_model_entries();
  int bootstrap = 2000;
  ThresholdPolicy threshold;
  ExplainConfig explain;
};

/// Strict parse: unknown keys raise ConfigError. Relative paths resolve
/// against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
/// Complete config with every default spelled out.
nlohmann::json to_json(const RunConfig& c);
/// Throws ConfigError for out-of-range values or paths that do not exist.
void validate(const RunConfig& c);
/// Hex SHA-256 of the canonical JSON form, output_dir excluded.
std::string config_hash(const RunConfig& c);

/// Built-in class moments of the default cohort, plus decoys when requested.
CohortSummary synth_summary(const SynthConfig& cfg);
std::vector<double> synth_missing_rates(const SynthConfig& cfg, const Schema& schema);

}  // namespace icurisk
