#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "icurisk/config.hpp"
#include "icurisk/run.hpp"

using namespace icurisk;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("icurisk_test_report_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig small_config(const fs::path& out) {
  nlohmann::json j = {
      {"seed", 5},
      {"output_dir", out.string()},
      {"cohort", {{"synth", {{"n", 400}}}}},
      {"cv", {{"folds", 3}}},
      {"models",
       {{{"name", "gbdt_exact"}, {"grid", {{{"family", "gbdt"}, {"params", {{"n_trees", 20}, {"max_depth", 2}}}}}}},
        {{"name", "logistic_regression"},
         {"grid", {{{"family", "logistic_regression"}, {"params", {{"penalty", "l2"}, {"C", 1.0}}}}}}}}},
      {"eval", {{"bootstrap", 50}}},
      {"explain",
       {{"ablation_bootstrap", 20},
        {"posterior_inputs", {{"dream", {{"n_generations", 1000}}}}},
        {"posterior_params", {{"enabled", false}}}}}};
  return run_config_from_json(j);
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

struct PipelineFixture : ::testing::Test {
  static void SetUpTestSuite() {
    dir_a = scratch("a") / "nested";
    dir_b = scratch("b");
    manifest_a = run_pipeline(small_config(dir_a));
    manifest_b = run_pipeline(small_config(dir_b));
  }
  static inline fs::path dir_a, dir_b;
  static inline RunManifest manifest_a, manifest_b;
};

}  // namespace

TEST_F(PipelineFixture, CompletesIntoCreatedDirectory) {
  EXPECT_EQ(manifest_a.status, "complete");
  EXPECT_TRUE(fs::exists(dir_a / "manifest.json"));
  for (const char* stage : {"dataset", "select", "models", "eval", "explain", "report"}) {
    bool found = false;
    for (const auto& s : manifest_a.stages) found = found || (s.name == stage && s.status == "ok");
    EXPECT_TRUE(found) << stage;
  }
}

TEST_F(PipelineFixture, ManifestListsEveryFile) {
  std::set<std::string> listed;
  for (const auto& a : manifest_a.artifacts) listed.insert(a.path);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir_a)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir_a).generic_string();
    if (rel == "manifest.json") continue;
    ++files;
    EXPECT_TRUE(listed.count(rel)) << rel;
  }
  EXPECT_EQ(files, listed.size());
  EXPECT_TRUE(listed.count("report.json"));
  EXPECT_TRUE(listed.count("metrics_test.csv"));
}

TEST_F(PipelineFixture, RerunsAreIdentical) {
  ASSERT_EQ(manifest_a.artifacts.size(), manifest_b.artifacts.size());
  for (std::size_t i = 0; i < manifest_a.artifacts.size(); ++i) {
    EXPECT_EQ(manifest_a.artifacts[i].path, manifest_b.artifacts[i].path);
    EXPECT_EQ(manifest_a.artifacts[i].sha256, manifest_b.artifacts[i].sha256) << manifest_a.artifacts[i].path;
  }
  EXPECT_EQ(manifest_a.config_hash, manifest_b.config_hash);
}

TEST_F(PipelineFixture, MetricsCsvMatchesReportExactly) {
  const auto report = nlohmann::json::parse(read_text(dir_a / "report.json"));
  const auto rows = read_csv_rows(dir_a / "metrics_test.csv");
  const auto& entries = report.at("metrics_test");
  ASSERT_EQ(rows.size(), entries.size() + 1);
  EXPECT_EQ(rows[1][0], "gbdt_exact");
  EXPECT_EQ(rows[2][0], "logistic_regression");
  const auto& header = rows[0];
  for (std::size_t r = 0; r < entries.size(); ++r)
    for (std::size_t c = 1; c < header.size(); ++c) {
      const auto& v = entries[r].at(header[c]);
      if (v.is_null()) {
        EXPECT_EQ(rows[r + 1][c], "NA");
      } else if (v.is_number_float()) {
        EXPECT_EQ(std::strtod(rows[r + 1][c].c_str(), nullptr), v.get<double>()) << header[c];
      } else {
        EXPECT_EQ(rows[r + 1][c], v.dump()) << header[c];
      }
    }
}

TEST_F(PipelineFixture, ReportReemissionIsStable) {
  const fs::path copy = scratch("copy");
  fs::copy(dir_b, copy, fs::copy_options::recursive);
  const RunManifest again = emit_report(copy);
  ASSERT_EQ(again.artifacts.size(), manifest_b.artifacts.size());
  for (std::size_t i = 0; i < again.artifacts.size(); ++i)
    EXPECT_EQ(again.artifacts[i].sha256, manifest_b.artifacts[i].sha256) << again.artifacts[i].path;
  fs::remove_all(copy);
}

TEST(Report, UnwritableOutputFails) {
  const fs::path base = scratch("blocked");
  fs::create_directories(base);
  write_text(base / "file", "x");
  EXPECT_ANY_THROW(run_pipeline(small_config(base / "file" / "out")));
  fs::remove_all(base);
}

TEST(Report, SlugAndManifestRoundTrip) {
  EXPECT_EQ(slug("Activity/Mobility (JH-HLM)"), "activity_mobility_jh_hlm");
  RunManifest m;
  m.config_hash = "abc";
  m.artifacts.push_back({"x.csv", "00", 3});
  m.stages.push_back({"dataset", 0.5, "ok"});
  EXPECT_EQ(to_json(manifest_from_json(to_json(m))), to_json(m));
}
