#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "icurisk/acceptance.hpp"
#include "icurisk/config.hpp"
#include "icurisk/error.hpp"
#include "icurisk/log.hpp"
#include "icurisk/parallel.hpp"
#include "icurisk/report.hpp"
#include "icurisk/run.hpp"
#include "icurisk/svg.hpp"
#include "icurisk/version.hpp"

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 0;
  bool serial = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON run config (defaults apply when omitted)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master seed; overrides the config");
  cmd->add_option("--out", o.out, "output directory; overrides the config");
  cmd->add_option("--jobs", o.jobs, "worker threads (0: runtime default)")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--serial", o.serial, "use the serial reference kernels");
  cmd->add_flag("-q,--quiet", o.quiet, "warnings and errors only");
}

icurisk::RunConfig resolve(const CommonOptions& o) {
  icurisk::RunConfig cfg = o.config.empty() ? icurisk::RunConfig{} : icurisk::load_run_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  return cfg;
}

icurisk::Exec exec_of(const CommonOptions& o) { return o.serial ? icurisk::Exec::serial : icurisk::Exec::parallel; }

void print_manifest(const icurisk::RunManifest& m, const std::filesystem::path& dir) {
  std::cout << "status " << m.status << ", " << m.artifacts.size() << " artifacts in " << dir.string() << "\n";
  for (const auto& s : m.stages) std::cout << "  " << s.name << " " << icurisk::fmt2(s.seconds) << " s\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ICU 30-day mortality risk modeling pipeline"};
  app.set_version_flag("--version", std::string(icurisk::kVersion));
  app.require_subcommand(1);

  CommonOptions synth_o, run_o, explain_o, report_o, self_o;
  auto* synth = app.add_subcommand("synth", "write a synthetic cohort (cohort.csv, schema.json)");
  add_common(synth, synth_o);
  auto* run = app.add_subcommand("run", "full pipeline: dataset, selection, models, evaluation, explanation, report");
  add_common(run, run_o);
  auto* explain = app.add_subcommand("explain", "recompute explanations from an earlier run in the output directory");
  add_common(explain, explain_o);
  auto* report = app.add_subcommand("report", "re-emit CSV/SVG projections of report.json and refresh the manifest");
  add_common(report, report_o);
  auto* self = app.add_subcommand("selftest", "run the acceptance suite");
  add_common(self, self_o);
  std::vector<int> only;
  self->add_option("--only", only, "criterion ids to run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const CommonOptions& o = synth->parsed()     ? synth_o
                             : run->parsed()     ? run_o
                             : explain->parsed() ? explain_o
                             : report->parsed()  ? report_o
                                                 : self_o;
    icurisk::set_jobs(o.jobs);
    if (o.quiet) icurisk::set_log_level(icurisk::LogLevel::warning);

    if (synth->parsed()) {
      const auto cfg = resolve(o);
      print_manifest(icurisk::write_synthetic_cohort(cfg), cfg.output_dir);
    } else if (run->parsed()) {
      const auto cfg = resolve(o);
      print_manifest(icurisk::run_pipeline(cfg, exec_of(o)), cfg.output_dir);
    } else if (explain->parsed()) {
      const auto cfg = resolve(o);
      print_manifest(icurisk::run_explain(cfg, exec_of(o)), cfg.output_dir);
    } else if (report->parsed()) {
      const auto cfg = resolve(o);
      print_manifest(icurisk::emit_report(cfg.output_dir), cfg.output_dir);
    } else {
      icurisk::AcceptanceOptions ao;
      ao.work_dir = o.out.empty() ? std::filesystem::temp_directory_path() / "icurisk-selftest" : std::filesystem::path(o.out);
      ao.exec = exec_of(o);
      ao.only = only;
      if (o.seed) ao.seed = *o.seed;
      std::size_t failed = 0;
      icurisk::run_acceptance(ao, [&](const icurisk::CriterionResult& r) {
        std::cout << icurisk::format_result(r) << std::endl;
        failed += !r.pass;
      });
      if (failed) {
        std::cerr << failed << " acceptance criteria failed\n";
        return 4;
      }
    }
  } catch (const icurisk::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "filesystem error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
