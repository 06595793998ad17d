#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "icurisk/cv.hpp"

namespace icurisk {

struct AblationEntry {
  std::string feature;
  double auroc = 0.0;                // point estimate on the full test set
  std::vector<double> distribution;  // B bootstrap AUROCs
  double mean = 0.0;
  double sd = 0.0;
  std::string note;
};

struct AblationReport {
  std::string model;
  double baseline_auroc = 0.0;
  std::vector<double> baseline_distribution;
  double baseline_mean = 0.0;
  double baseline_sd = 0.0;
  std::vector<AblationEntry> entries;
};

/// Refits preprocessing and the fixed model spec once per dropped feature.
/// Every distribution uses the same bootstrap streams, so differences come
/// from the model alone. Features run in parallel when requested.
AblationReport ablation(const CohortTable& train, const CohortTable& test, const ModelSpec& spec,
                        const PipelineConfig& pipeline, std::span<const std::string> features, int B,
                        std::uint64_t seed, Exec exec = Exec::parallel);

nlohmann::json to_json(const AblationReport& r);
AblationReport ablation_from_json(const nlohmann::json& j);

}  // namespace icurisk
