// Runs every acceptance criterion and prints one PASS/FAIL line each.

#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "icurisk/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"icurisk acceptance criteria"};
  std::string work_dir = (std::filesystem::temp_directory_path() / "icurisk-acceptance").string();
  std::vector<int> only;
  bool serial = false;
  app.add_option("--work-dir", work_dir, "directory for end-to-end runs");
  app.add_option("--only", only, "criterion ids to run")->check(CLI::Range(1, icurisk::kAcceptanceCriteria));
  app.add_flag("--serial", serial, "use the serial kernels");
  CLI11_PARSE(app, argc, argv);

  icurisk::AcceptanceOptions opt;
  opt.work_dir = work_dir;
  opt.only = only;
  opt.exec = serial ? icurisk::Exec::serial : icurisk::Exec::parallel;
  const auto results = icurisk::run_acceptance(opt, [](const icurisk::CriterionResult& r) {
    std::printf("%s\n", icurisk::format_result(r).c_str());
    std::fflush(stdout);
  });
  int failed = 0;
  for (const auto& r : results) failed += !r.pass;
  std::printf("%zu criteria, %d failed\n", results.size(), failed);
  return failed == 0 ? 0 : 1;
}
