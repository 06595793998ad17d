#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "icurisk/parallel.hpp"

namespace icurisk {

struct AcceptanceOptions {
  std::filesystem::path work_dir = "acceptance_work";  // end-to-end runs write here
  Exec exec = Exec::parallel;
  std::uint64_t seed = 20240611;
  std::vector<int> only;  // empty: all criteria
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

inline constexpr int kAcceptanceCriteria = 11;

/// Runs the acceptance criteria in order. `on_result` sees each result as
/// soon as it is known. A criterion that throws counts as failed.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// "PASS [ 4] shap oracle: ..." on one line.
std::string format_result(const CriterionResult& r);

}  // namespace icurisk
