#include "icurisk/report.hpp"

#include <openssl/opensslv.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>

#include "icurisk/ablation.hpp"
#include "icurisk/ale.hpp"
#include "icurisk/checksum.hpp"
#include "icurisk/dataset.hpp"
#include "icurisk/error.hpp"
#include "icurisk/metrics.hpp"
#include "icurisk/posterior.hpp"
#include "icurisk/select.hpp"
#include "icurisk/svg.hpp"
#include "icurisk/version.hpp"

namespace icurisk {

using nlohmann::json;

nlohmann::json to_json(const RunManifest& m) {
  json artifacts = json::array();
  for (const auto& a : m.artifacts) artifacts.push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  json stages = json::array();
  for (const auto& s : m.stages) stages.push_back({{"name", s.name}, {"seconds", s.seconds}, {"status", s.status}});
  return {{"format", "icurisk-manifest"}, {"version", 1},          {"config_hash", m.config_hash},
          {"artifacts", artifacts},       {"versions", m.versions}, {"stages", stages},
          {"status", m.status},           {"failed_stage", m.failed_stage}, {"error", m.error}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.config_hash = j.value("config_hash", std::string());
  for (const auto& a : j.at("artifacts"))
    m.artifacts.push_back({a.at("path").get<std::string>(), a.at("sha256").get<std::string>(),
                           a.at("bytes").get<std::uintmax_t>()});
  m.versions = j.value("versions", json::object());
  for (const auto& s : j.at("stages"))
    m.stages.push_back({s.at("name").get<std::string>(), s.at("seconds").get<double>(), s.at("status").get<std::string>()});
  m.status = j.value("status", std::string("complete"));
  m.failed_stage = j.value("failed_stage", std::string());
  m.error = j.value("error", std::string());
  return m;
}

nlohmann::json build_versions() {
  return {{"icurisk", kVersion},
          {"compiler", __VERSION__},
          {"cplusplus", __cplusplus},
#ifdef _OPENMP
          {"openmp", _OPENMP},
#else
          {"openmp", nullptr},
#endif
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"openssl", OPENSSL_VERSION_TEXT}};
}

std::vector<Artifact> list_artifacts(const std::filesystem::path& dir) {
  std::vector<Artifact> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = std::filesystem::relative(e.path(), dir).generic_string();
    if (rel == "manifest.json") continue;
    out.push_back({rel, sha256_file(e.path()), e.file_size()});
  }
  std::sort(out.begin(), out.end(), [](const Artifact& a, const Artifact& b) { return a.path < b.path; });
  return out;
}

RunManifest write_manifest(const std::filesystem::path& dir, RunManifest manifest) {
  manifest.artifacts = list_artifacts(dir);
  if (manifest.versions.is_null()) manifest.versions = build_versions();
  write_text(dir / "manifest.json", to_json(manifest).dump(2) + "\n");
  return manifest;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::filesystem::filesystem_error("cannot write", path, std::make_error_code(std::errc::permission_denied));
  out << text;
  if (!out) throw std::filesystem::filesystem_error("write failed", path, std::make_error_code(std::errc::io_error));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string slug(const std::string& name) {
  std::string out;
  for (unsigned char c : name) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
    else if (!out.empty() && out.back() != '_') out.push_back('_');
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "feature" : out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string num(const json& v) {
  if (v.is_null()) return "NA";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  return format_double(v.get<double>());
}

Matrix matrix_from_json(const json& rows, std::size_t cols) {
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c].get<double>();
  return m;
}

void emit_risk(const json& risk, const std::string& stem, const std::string& title, const std::filesystem::path& dir,
               std::vector<std::string>& written) {
  const PosteriorRisk r = posterior_risk_from_json(risk);
  std::ostringstream csv;
  csv << "sample,risk\n";
  for (std::size_t i = 0; i < r.samples.size(); ++i) csv << i << ',' << format_double(r.samples[i]) << '\n';
  write_text(dir / (stem + ".csv"), csv.str());
  write_text(dir / (stem + ".svg"), histogram_svg(r.samples, r.mean, r.low, r.high, title));
  written.push_back(stem + ".csv");
  written.push_back(stem + ".svg");
}

}  // namespace

std::vector<std::string> emit_projections(const nlohmann::json& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& text) {
    write_text(dir / name, text);
    written.push_back(name);
  };

  for (const char* key : {"cohort_ttest", "class_ttest"}) {
    std::vector<CohortComparison> rows;
    for (const auto& r : report.at(key)) rows.push_back(cohort_comparison_from_json(r));
    put(std::string(key) + ".csv", cohort_ttest_csv(rows));
  }

  const auto& sel = report.at("selection");
  put("selection_report.csv", selection_report_csv(coverage_report_from_json(sel.at("coverage")),
                                                   mi_ranking_from_json(sel.at("ranking"))));

  {
    std::ostringstream csv;
    csv << "model,config,params,mean_auroc,sd_auroc,selected\n";
    for (const auto& m : report.at("models")) {
      const auto& cv = m.at("cv");
      const auto best = cv.at("best").get<std::size_t>();
      const auto& configs = cv.at("configs");
      for (std::size_t c = 0; c < configs.size(); ++c)
        csv << csv_field(m.at("name").get<std::string>()) << ',' << c << ','
            << csv_field(configs[c].at("spec").at("params").dump()) << ',' << num(configs[c].at("mean_auroc")) << ','
            << num(configs[c].at("sd_auroc")) << ',' << (c == best ? "true" : "false") << '\n';
    }
    put("cv_results.csv", csv.str());
  }

  for (const char* key : {"metrics_train", "metrics_test"}) {
    std::vector<MetricReport> rows;
    for (const auto& r : report.at(key)) rows.push_back(metric_report_from_json(r));
    put(std::string(key) + ".csv", metrics_csv(rows));
  }

  {
    std::vector<NamedRoc> curves;
    for (const auto& c : report.at("roc_test")) {
      NamedRoc roc{c.at("model").get<std::string>(), {}};
      std::ostringstream csv;
      csv << "fpr,tpr,threshold\n";
      for (const auto& p : c.at("points")) {
        const double thr = p.at("threshold").is_null() ? std::numeric_limits<double>::infinity()
                                                       : p.at("threshold").get<double>();
        roc.points.push_back({p.at("fpr").get<double>(), p.at("tpr").get<double>(), thr});
        csv << num(p.at("fpr")) << ',' << num(p.at("tpr")) << ','
            << (p.at("threshold").is_null() ? std::string("inf") : num(p.at("threshold"))) << '\n';
      }
      put("roc_test_" + slug(roc.name) + ".csv", csv.str());
      curves.push_back(std::move(roc));
    }
    put("roc_test.svg", roc_svg(curves));
  }

  if (!report.contains("explain") || report.at("explain").is_null()) return written;
  const auto& ex = report.at("explain");

  if (ex.contains("ablation") && !ex.at("ablation").is_null()) {
    const AblationReport ab = ablation_from_json(ex.at("ablation"));
    std::ostringstream csv;
    csv << "feature,auroc,mean,sd,delta_mean,note\n";
    csv << "(none)," << format_double(ab.baseline_auroc) << ',' << format_double(ab.baseline_mean) << ','
        << format_double(ab.baseline_sd) << ",0,baseline\n";
    for (const auto& e : ab.entries) {
      if (e.distribution.empty()) {
        csv << csv_field(e.feature) << ",NA,NA,NA,NA," << csv_field(e.note) << '\n';
        continue;
      }
      csv << csv_field(e.feature) << ',' << format_double(e.auroc) << ',' << format_double(e.mean) << ','
          << format_double(e.sd) << ',' << format_double(e.mean - ab.baseline_mean) << ',' << csv_field(e.note) << '\n';
    }
    put("ablation.csv", csv.str());
    put("ablation.svg", ablation_svg(ab));
  }

  if (ex.contains("shap") && !ex.at("shap").is_null()) {
    const auto& sh = ex.at("shap");
    const auto features = sh.at("features").get<std::vector<std::string>>();
    const Matrix phi = matrix_from_json(sh.at("phi"), features.size());
    const Matrix values = matrix_from_json(sh.at("values"), features.size());
    std::ostringstream csv;
    csv << "row,feature,phi\n";
    for (std::size_t r = 0; r < phi.rows(); ++r)
      for (std::size_t j = 0; j < features.size(); ++j)
        csv << r << ',' << csv_field(features[j]) << ',' << format_double(phi(r, j)) << '\n';
    put("shap_summary.csv", csv.str());
    put("shap_summary.svg", shap_beeswarm_svg(features, phi, values));
  }

  if (ex.contains("ale")) {
    for (const auto& cj : ex.at("ale")) {
      const AleCurve c = ale_from_json(cj);
      std::ostringstream csv;
      csv << "edge,effect,count\n";
      for (std::size_t k = 0; k < c.edges.size(); ++k) {
        // Continuous: rows in the bin that ends at this edge (the first edge
        // opens bin 0). Binary: rows at this level.
        std::size_t count = 0;
        if (c.binary || c.counts.size() == c.edges.size()) count = c.counts[k];
        else if (k > 0) count = c.counts[k - 1];
        csv << format_double(c.edges[k]) << ',' << format_double(c.effects[k]) << ',' << count << '\n';
      }
      put("ale_" + slug(c.feature) + ".csv", csv.str());
      put("ale_" + slug(c.feature) + ".svg", ale_svg(c));
    }
  }

  if (ex.contains("posterior_inputs") && !ex.at("posterior_inputs").is_null())
    emit_risk(ex.at("posterior_inputs"), "posterior", "Posterior risk under non-survivor feature priors", dir, written);
  if (ex.contains("posterior_params") && !ex.at("posterior_params").is_null())
    emit_risk(ex.at("posterior_params"), "posterior_params", "Posterior predictive risk for one test patient", dir,
              written);
  return written;
}

RunManifest emit_report(const std::filesystem::path& dir) {
  const auto path = dir / "report.json";
  if (!std::filesystem::exists(path)) throw DataError("no report.json in " + dir.string());
  json report;
  try {
    report = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw DataError("report.json is not valid JSON: " + std::string(e.what()));
  }
  if (report.value("format", std::string()) != "icurisk-report") throw DataError("not an icurisk report");
  emit_projections(report, dir);
  RunManifest m;
  if (std::filesystem::exists(dir / "manifest.json")) {
    try {
      m = manifest_from_json(json::parse(read_text(dir / "manifest.json")));
    } catch (const std::exception&) {
      m = RunManifest{};
    }
  }
  m.config_hash = report.value("config_hash", m.config_hash);
  m.versions = build_versions();
  return write_manifest(dir, std::move(m));
}

}  // namespace icurisk
