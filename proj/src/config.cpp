#include "icurisk/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "icurisk/checksum.hpp"
#include "icurisk/error.hpp"

namespace icurisk {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) try {
  check_keys(j, {"seed", "output_dir", "cohort", "schema_path", "split", "preprocess", "selection", "cv",
                 "models", "eval", "explain"},
             "config");
  RunConfig c;
  if (!j.contains("seed")) throw ConfigError("config must set a seed");
  read(j, "seed", c.seed);
  if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>(), base_dir);
  if (j.contains("schema_path") && !j.at("schema_path").is_null())
    c.schema_path = resolve(j.at("schema_path").get<std::string>(), base_dir);

  if (j.contains("cohort")) {
    const auto& co = j.at("cohort");
    check_keys(co, {"path", "synth"}, "cohort");
    if (co.contains("path") && !co.at("path").is_null())
      c.cohort_path = resolve(co.at("path").get<std::string>(), base_dir);
    if (co.contains("synth")) {
      const auto& s = co.at("synth");
      check_keys(s, {"n", "event_rate", "default_missing_rate", "missing_rates", "decoys"}, "cohort.synth");
      read(s, "n", c.synth.n);
      read(s, "event_rate", c.synth.event_rate);
      read(s, "default_missing_rate", c.synth.default_missing_rate);
      read(s, "missing_rates", c.synth.missing_rates);
      read(s, "decoys", c.synth.decoys);
    }
  }
  if (j.contains("split")) {
    check_keys(j.at("split"), {"train_fraction"}, "split");
    read(j.at("split"), "train_fraction", c.train_fraction);
  }
  if (j.contains("preprocess")) {
    check_keys(j.at("preprocess"), {"knn_k", "alpha"}, "preprocess");
    c.preprocess = pipeline_config_from_json(j.at("preprocess"));
  }
  if (j.contains("selection")) {
    const auto& s = j.at("selection");
    check_keys(s, {"max_missing_fraction", "min_documented_patients", "min_variance", "n_bins", "min_mi", "top_k"},
               "selection");
    read(s, "max_missing_fraction", c.selection.coverage.max_missing_fraction);
    read(s, "min_documented_patients", c.selection.coverage.min_documented_patients);
    read(s, "min_variance", c.selection.coverage.min_variance);
    read(s, "n_bins", c.selection.n_bins);
    read(s, "min_mi", c.selection.min_mi);
    read(s, "top_k", c.top_k);
  }
  if (j.contains("cv")) {
    check_keys(j.at("cv"), {"folds"}, "cv");
    read(j.at("cv"), "folds", c.cv_folds);
  }
  if (j.contains("models")) {
    c.models.clear();
    for (const auto& m : j.at("models")) c.models.push_back(model_entry_from_json(m));
  }
  if (j.contains("eval")) {
    check_keys(j.at("eval"), {"bootstrap", "threshold_policy"}, "eval");
    read(j.at("eval"), "bootstrap", c.bootstrap);
    if (j.at("eval").contains("threshold_policy"))
      c.threshold = threshold_policy_from_json(j.at("eval").at("threshold_policy"));
  }
  if (j.contains("explain")) {
    const auto& e = j.at("explain");
    check_keys(e, {"enabled", "model", "ablation_model", "shap_background", "ale_bins", "ablation_bootstrap",
                   "posterior_inputs", "posterior_params", "posterior_row"},
               "explain");
    auto& x = c.explain;
    read(e, "enabled", x.enabled);
    read(e, "model", x.model);
    read(e, "ablation_model", x.ablation_model);
    read(e, "shap_background", x.shap_background);
    read(e, "ale_bins", x.ale_bins);
    read(e, "ablation_bootstrap", x.ablation_bootstrap);
    read(e, "posterior_row", x.posterior_row);
    if (e.contains("posterior_inputs")) {
      const auto& p = e.at("posterior_inputs");
      check_keys(p, {"dream", "max_samples", "max_combinations"}, "explain.posterior_inputs");
      if (p.contains("dream")) x.posterior_inputs.dream = dream_config_from_json(p.at("dream"), x.posterior_inputs.dream);
      read(p, "max_samples", x.posterior_inputs.max_samples);
      read(p, "max_combinations", x.posterior_inputs.max_combinations);
    }
    if (e.contains("posterior_params")) {
      const auto& p = e.at("posterior_params");
      check_keys(p, {"enabled", "dream", "prior_sd", "init_sd", "rhat_limit"}, "explain.posterior_params");
      read(p, "enabled", x.posterior_params_enabled);
      if (p.contains("dream")) x.posterior_params.dream = dream_config_from_json(p.at("dream"), x.posterior_params.dream);
      read(p, "prior_sd", x.posterior_params.prior_sd);
      read(p, "init_sd", x.posterior_params.init_sd);
      read(p, "rhat_limit", x.posterior_params.rhat_limit);
    }
  }
  return c;
} catch (const json::exception& e) {
  throw ConfigError(std::string("malformed config: ") + e.what());
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

json to_json(const RunConfig& c) {
  json models = json::array();
  for (const auto& m : c.models) models.push_back(to_json(m));
  json cohort{{"path", c.cohort_path ? json(c.cohort_path->generic_string()) : json(nullptr)},
              {"synth",
               {{"n", c.synth.n},
                {"event_rate", c.synth.event_rate},
                {"default_missing_rate", c.synth.default_missing_rate},
                {"missing_rates", c.synth.missing_rates},
                {"decoys", c.synth.decoys}}}};
  const auto& x = c.explain;
  return {{"seed", c.seed},
          {"output_dir", c.output_dir.generic_string()},
          {"cohort", cohort},
          {"schema_path", c.schema_path ? json(c.schema_path->generic_string()) : json(nullptr)},
          {"split", {{"train_fraction", c.train_fraction}}},
          {"preprocess", {{"knn_k", c.preprocess.knn_k}, {"alpha", c.preprocess.alpha}}},
          {"selection",
           {{"max_missing_fraction", c.selection.coverage.max_missing_fraction},
            {"min_documented_patients", c.selection.coverage.min_documented_patients},
            {"min_variance", c.selection.coverage.min_variance},
            {"n_bins", c.selection.n_bins},
            {"min_mi", c.selection.min_mi},
            {"top_k", c.top_k}}},
          {"cv", {{"folds", c.cv_folds}}},
          {"models", models},
          {"eval", {{"bootstrap", c.bootstrap}, {"threshold_policy", to_json(c.threshold)}}},
          {"explain",
           {{"enabled", x.enabled},
            {"model", x.model},
            {"ablation_model", x.ablation_model},
            {"shap_background", x.shap_background},
            {"ale_bins", x.ale_bins},
            {"ablation_bootstrap", x.ablation_bootstrap},
            {"posterior_row", x.posterior_row},
            {"posterior_inputs",
             {{"dream", to_json(x.posterior_inputs.dream)},
              {"max_samples", x.posterior_inputs.max_samples},
              {"max_combinations", x.posterior_inputs.max_combinations}}},
            {"posterior_params",
             {{"enabled", x.posterior_params_enabled},
              {"dream", to_json(x.posterior_params.dream)},
              {"prior_sd", x.posterior_params.prior_sd},
              {"init_sd", x.posterior_params.init_sd},
              {"rhat_limit", x.posterior_params.rhat_limit}}}}}};
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  if (c.cohort_path) require(std::filesystem::exists(*c.cohort_path), "cohort file " + c.cohort_path->string() + " does not exist");
  if (c.schema_path) require(std::filesystem::exists(*c.schema_path), "schema file " + c.schema_path->string() + " does not exist");
  require(c.synth.n >= 10, "synth.n must be >= 10");
  require(c.synth.event_rate > 0.0 && c.synth.event_rate < 1.0, "synth.event_rate must be in (0,1)");
  require(c.synth.default_missing_rate >= 0.0 && c.synth.default_missing_rate < 1.0,
          "synth.default_missing_rate must be in [0,1)");
  for (const auto& [k, v] : c.synth.missing_rates)
    require(v >= 0.0 && v < 1.0, "missing rate of '" + k + "' must be in [0,1)");
  require(c.train_fraction > 0.0 && c.train_fraction < 1.0, "split.train_fraction must be in (0,1)");
  require(c.preprocess.knn_k >= 1, "preprocess.knn_k must be >= 1");
  require(c.preprocess.alpha >= 0.0, "preprocess.alpha must be >= 0");
  require(c.top_k >= 1, "selection.top_k must be >= 1");
  require(c.selection.n_bins >= 2, "selection.n_bins must be >= 2");
  require(c.cv_folds >= 2, "cv.folds must be >= 2");
  require(!c.models.empty(), "models must not be empty");
  std::set<std::string> names;
  for (const auto& m : c.models) {
    require(!m.grid.empty(), "model '" + m.name + "' has an empty grid");
    require(names.insert(m.name).second, "duplicate model name '" + m.name + "'");
  }
  require(c.bootstrap >= 1, "eval.bootstrap must be >= 1");
  require(c.explain.ale_bins >= 1, "explain.ale_bins must be >= 1");
  require(c.explain.shap_background >= 1, "explain.shap_background must be >= 1");
  require(c.explain.ablation_bootstrap >= 1, "explain.ablation_bootstrap must be >= 1");
  for (const auto* name : {&c.explain.model, &c.explain.ablation_model})
    require(*name == "auto" || names.count(*name), "explain refers to unknown model '" + *name + "'");
}

std::string config_hash(const RunConfig& c) {
  // Where results land does not change what is computed.
  json j = to_json(c);
  j.erase("output_dir");
  return sha256_hex(j.dump());
}

CohortSummary synth_summary(const SynthConfig& cfg) {
  CohortSummary s = default_class_moments();
  if (!cfg.decoys) return s;
  auto add = [&s](FeatureSpec spec, FeatureStats a, FeatureStats b) {
    FeatureStats all;
    const double f1 = s.event_rate, f0 = 1.0 - f1;
    if (a.mean && b.mean) {
      all.mean = f0 * *a.mean + f1 * *b.mean;
      const double sa = a.sd.value_or(0.0), sb = b.sd.value_or(0.0);
      all.sd = std::sqrt(f0 * (sa * sa + *a.mean * *a.mean) + f1 * (sb * sb + *b.mean * *b.mean) -
                         *all.mean * *all.mean);
    }
    if (!a.level_freq.empty()) all.level_freq = a.level_freq;
    s.schema.push_back(std::move(spec));
    s.survivors.push_back(std::move(a));
    s.nonsurvivors.push_back(std::move(b));
    s.overall.push_back(std::move(all));
  };
  auto moments = [](double m, double sd) {
    FeatureStats f;
    f.mean = m;
    f.sd = sd;
    return f;
  };
  // Mildly informative but mostly missing: dropped for missingness.
  add({"Glucose", FeatureKind::continuous, "mg/dL", 20.0, 1000.0, {}}, moments(140.0, 50.0), moments(150.0, 55.0));
  // Charted for very few patients: dropped for documentation.
  add({"GCS Total", FeatureKind::ordinal_score, "points", 3.0, 15.0, {}}, moments(11.0, 3.0), moments(8.0, 4.0));
  // Unrelated to the outcome: reaches the ranking and scores near zero.
  {
    FeatureStats a, b;
    a.level_freq = b.level_freq = {0.5, 0.3, 0.2};
    add({"Oxygen Device Type", FeatureKind::categorical, "", std::nullopt, std::nullopt,
         {"None", "Nasal cannula", "Face mask"}},
        a, b);
  }
  // Never set: dropped for zero variance.
  add({"Isolation Flag", FeatureKind::binary, "", 0.0, 1.0, {}}, moments(0.0, 0.0), moments(0.0, 0.0));
  return s;
}

std::vector<double> synth_missing_rates(const SynthConfig& cfg, const Schema& schema) {
  std::vector<double> rates(schema.size(), cfg.default_missing_rate);
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const auto& name = schema[c].name;
    if (name == "Glucose") rates[c] = 0.30;
    if (name == "GCS Total") rates[c] = 0.93;
    if (name == "Isolation Flag") rates[c] = 0.0;
    if (auto it = cfg.missing_rates.find(name); it != cfg.missing_rates.end()) rates[c] = it->second;
  }
  for (const auto& [name, rate] : cfg.missing_rates)
    if (!find_feature(schema, name)) throw ConfigError("missing rate given for unknown feature '" + name + "'");
  return rates;
}

}  // namespace icurisk
