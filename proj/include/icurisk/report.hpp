#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace icurisk {

struct Artifact {
  std::string path;  // relative to the output directory, '/' separated
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct StageTiming {
  std::string name;
  double seconds = 0.0;
  std::string status;  // "ok" or "failed"
};

struct RunManifest {
  std::string config_hash;
  std::vector<Artifact> artifacts;
  nlohmann::json versions;
  std::vector<StageTiming> stages;
  std::string status = "complete";  // or "failed"
  std::string failed_stage;
  std::string error;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

/// Library, compiler and dependency versions recorded in manifests.
nlohmann::json build_versions();

/// Every file under `dir` except manifest.json, sorted by path.
std::vector<Artifact> list_artifacts(const std::filesystem::path& dir);

/// Checksums the directory and writes manifest.json last.
RunManifest write_manifest(const std::filesystem::path& dir, RunManifest manifest);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Lowercase alphanumerics with '_' for everything else; used in file names.
std::string slug(const std::string& name);

/// Writes every CSV and SVG projection of `report` into `dir`. Numbers are
/// printed in shortest round-trip form, so each CSV value parses back to the
/// exact double stored in the report. Returns the files written.
std::vector<std::string> emit_projections(const nlohmann::json& report, const std::filesystem::path& dir);

/// Reads dir/report.json, rewrites its projections and the manifest. Stage
/// timings from an existing manifest are kept.
RunManifest emit_report(const std::filesystem::path& dir);

}  // namespace icurisk
