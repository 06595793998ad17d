#pragma once

#include <filesystem>

#include "icurisk/config.hpp"
#include "icurisk/error.hpp"
#include "icurisk/parallel.hpp"
#include "icurisk/report.hpp"

namespace icurisk {

/// Error raised inside a pipeline stage: the message names the stage and the
/// exit code is that of the original error.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, int code)
      : Error("stage '" + stage + "': " + what), stage_(std::move(stage)), code_(code) {}
  const std::string& stage() const noexcept { return stage_; }
  int exit_code() const noexcept override { return code_; }

 private:
  std::string stage_;
  int code_;
};

/// Cohort named by the config, or a synthetic one drawn with the run seed.
CohortTable make_cohort(const RunConfig& config);

/// Writes cohort.csv and schema.json for the configured synthetic cohort.
RunManifest write_synthetic_cohort(const RunConfig& config);

/// dataset -> select -> models -> eval -> explain (when enabled) -> report.
/// Everything lands in config.output_dir; the manifest is written last, also
/// when a stage fails.
RunManifest run_pipeline(const RunConfig& config, Exec exec = Exec::parallel);

/// Selection, cross-validation and final fits on the training rows of
/// `split`, serialized. Nothing is written to disk.
nlohmann::json fit_training_state(const RunConfig& config, const CohortTable& cohort, const SplitIndex& split,
                                  Exec exec = Exec::parallel);

/// Recomputes the explanation stage from the artifacts of an earlier run in
/// config.output_dir and re-emits the report.
RunManifest run_explain(const RunConfig& config, Exec exec = Exec::parallel);

}  // namespace icurisk
