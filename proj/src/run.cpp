#include "icurisk/run.hpp"

#include <chrono>
#include <optional>

#include "icurisk/ablation.hpp"
#include "icurisk/ale.hpp"
#include "icurisk/cv.hpp"
#include "icurisk/error.hpp"
#include "icurisk/log.hpp"
#include "icurisk/metrics.hpp"
#include "icurisk/posterior.hpp"
#include "icurisk/rng.hpp"
#include "icurisk/select.hpp"
#include "icurisk/shap.hpp"

namespace icurisk {

using nlohmann::json;

namespace {

// Seed streams under the run seed.
enum Stream : std::uint64_t {
  kSynth = 1,
  kSplit = 2,
  kCv = 100,
  kFit = 200,
  kBootTest = 300,
  kBootTrain = 400,
  kShapBackground = 500,
  kAblation = 600,
  kPosteriorInputs = 700,
  kPosteriorParams = 800,
};

struct RunState {
  RunConfig cfg;
  CohortTable cohort;
  SplitIndex split;
  std::vector<std::string> selected;
  CohortTable train, test;  // selected features only
  std::vector<std::string> names;
  std::vector<ModelSpec> specs;  // winning configuration per model
  std::vector<double> cv_auroc;  // its mean out-of-fold AUROC
  std::vector<FittedModel> fitted;
  json report = json::object();
  bool persist = true;  // write model artifacts to output_dir
};

class StageRunner {
 public:
  StageRunner(std::filesystem::path dir, std::string config_hash) : dir_(std::move(dir)) {
    manifest_.config_hash = std::move(config_hash);
  }

  template <class F>
  void run(const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    log_info("stage " + name);
    try {
      body();
    } catch (const Error& e) {
      fail(name, elapsed(), e.what());
      throw StageError(name, e.what(), e.exit_code());
    } catch (const std::exception& e) {
      fail(name, elapsed(), e.what());
      throw StageError(name, e.what(), 1);
    }
    manifest_.stages.push_back({name, elapsed(), "ok"});
  }

  /// Timings of stages that ran in an earlier invocation.
  void keep_stages(std::vector<StageTiming> earlier) { manifest_.stages = std::move(earlier); }

  RunManifest finish() { return write_manifest(dir_, manifest_); }

 private:
  void fail(const std::string& name, double seconds, const std::string& what) {
    manifest_.stages.push_back({name, seconds, "failed"});
    manifest_.status = "failed";
    manifest_.failed_stage = name;
    manifest_.error = what;
    if (!std::filesystem::is_directory(dir_)) return;
    try {
      write_manifest(dir_, manifest_);
    } catch (const std::exception& e) {
      log_warning(std::string("could not write the failure manifest: ") + e.what());
    }
  }

  std::filesystem::path dir_;
  RunManifest manifest_;
};

void prepare_output(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  // Stale projections from an earlier run would end up in the manifest.
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".csv" || ext == ".svg") && e.path().filename() != "cohort.csv")
      std::filesystem::remove(e.path());
  }
}

Schema cohort_schema(const RunConfig& cfg) {
  if (cfg.schema_path) return load_schema(*cfg.schema_path);
  return cfg.cohort_path ? default_schema() : synth_summary(cfg.synth).schema;
}

json metrics_entry(const std::string& name, std::span<const double> p, std::span<const int> y, double threshold,
                   int B, std::uint64_t seed, Exec exec) {
  MetricReport m = confusion_metrics(p, y, threshold);
  m.model = name;
  m.auroc = auroc(p, y);
  const Interval ci = bootstrap_auroc_ci(p, y, B, seed, exec);
  m.auroc_ci_low = ci.low;
  m.auroc_ci_high = ci.high;
  return to_json(m);
}

json roc_entry(const std::string& name, std::span<const double> p, std::span<const int> y) {
  json pts = json::array();
  for (const auto& pt : roc_curve(p, y))
    pts.push_back({{"fpr", pt.fpr}, {"tpr", pt.tpr},
                   {"threshold", std::isinf(pt.threshold) ? json(nullptr) : json(pt.threshold)}});
  return {{"model", name}, {"points", pts}};
}

std::filesystem::path model_path(const std::filesystem::path& dir, const std::string& name) {
  return dir / "models" / (slug(name) + ".json");
}

void stage_dataset(RunState& s, Exec) {
  const auto& cfg = s.cfg;
  s.cohort = make_cohort(cfg);
  save_schema(s.cohort.schema(), cfg.output_dir / "schema.json");
  save_cohort(s.cohort, cfg.output_dir / "cohort.csv");
  s.split = stratified_split(s.cohort, cfg.train_fraction, derive_seed(cfg.seed, kSplit));
  write_text(cfg.output_dir / "split.json", split_to_json(s.split).dump(2) + "\n");

  const CohortTable train = s.cohort.subset(s.split.train_rows);
  const CohortTable test = s.cohort.subset(s.split.test_rows);
  json names = json::array();
  for (const auto& f : s.cohort.schema()) names.push_back(f.name);
  s.report["cohort"] = {{"source", cfg.cohort_path ? "file" : "synthetic"},
                        {"n", s.cohort.rows()},
                        {"positives", s.cohort.positives()},
                        {"event_rate", s.cohort.event_rate()},
                        {"features", names},
                        {"train_n", train.rows()},
                        {"test_n", test.rows()},
                        {"train_event_rate", train.event_rate()},
                        {"test_event_rate", test.event_rate()}};

  json ttest = json::array();
  for (const auto& r : compare_cohorts(train, test)) ttest.push_back(to_json(r));
  s.report["cohort_ttest"] = ttest;

  std::vector<std::size_t> rows0, rows1;
  for (std::size_t r = 0; r < s.cohort.rows(); ++r) (s.cohort.labels()[r] == 1 ? rows1 : rows0).push_back(r);
  json cls = json::array();
  for (const auto& r : compare_cohorts(s.cohort.subset(rows0), s.cohort.subset(rows1))) cls.push_back(to_json(r));
  s.report["class_ttest"] = cls;
}

void stage_select(RunState& s, Exec) {
  const auto& cfg = s.cfg;
  // Both steps see the training split only, so held-out rows cannot move
  // the feature set.
  const CohortTable raw_train = s.cohort.subset(s.split.train_rows);
  const CoverageReport coverage = coverage_filter(raw_train, cfg.selection.coverage);
  const MIRanking ranking = rank_features(raw_train.select_features(coverage.kept), cfg.selection, cfg.top_k);
  s.selected = ranking.selected;
  s.train = s.cohort.subset(s.split.train_rows).select_features(s.selected);
  s.test = s.cohort.subset(s.split.test_rows).select_features(s.selected);
  s.report["selection"] = {{"coverage", to_json(coverage)}, {"ranking", to_json(ranking)}, {"selected", s.selected}};
}

void stage_models(RunState& s, Exec exec) {
  const auto& cfg = s.cfg;
  json models = json::array();
  for (std::size_t i = 0; i < cfg.models.size(); ++i) {
    const auto& entry = cfg.models[i];
    log_info("cross-validating " + entry.name);
    const GridSearchResult gs =
        cross_validate(s.train, entry.grid, cfg.preprocess, cfg.cv_folds, derive_seed(cfg.seed, kCv + i), exec);
    const double threshold = tune_threshold(gs.oof_scores, s.train.labels(), cfg.threshold);
    FittedModel fm = fit_model(s.train, gs.best_spec(), cfg.preprocess, derive_seed(cfg.seed, kFit + i), exec);
    fm.model.name = entry.name;
    if (s.persist)
      write_text(model_path(cfg.output_dir, entry.name),
                 json{{"fitted", to_json(fm)}, {"spec", to_json(gs.best_spec())}, {"threshold", threshold}}.dump() + "\n");

    json cv = to_json(gs);
    cv.erase("oof_scores");
    models.push_back({{"name", entry.name},
                      {"family", to_string(gs.best_spec().family)},
                      {"cv", cv},
                      {"threshold", threshold},
                      {"threshold_policy", to_json(cfg.threshold)}});
    s.names.push_back(entry.name);
    s.specs.push_back(gs.best_spec());
    s.cv_auroc.push_back(gs.configs[gs.best].mean_auroc);
    s.fitted.push_back(std::move(fm));
  }
  s.report["models"] = models;
}

void stage_eval(RunState& s, Exec exec) {
  const auto& cfg = s.cfg;
  json train_rows = json::array(), test_rows = json::array(), roc = json::array();
  for (std::size_t i = 0; i < s.fitted.size(); ++i) {
    const double thr = s.report["models"][i]["threshold"].get<double>();
    const auto p_test = s.fitted[i].predict_proba(s.test, exec);
    const auto p_train = s.fitted[i].predict_proba(s.train, exec);
    test_rows.push_back(metrics_entry(s.names[i], p_test, s.test.labels(), thr, cfg.bootstrap,
                                      derive_seed(cfg.seed, kBootTest + i), exec));
    train_rows.push_back(metrics_entry(s.names[i], p_train, s.train.labels(), thr, cfg.bootstrap,
                                       derive_seed(cfg.seed, kBootTrain + i), exec));
    roc.push_back(roc_entry(s.names[i], p_test, s.test.labels()));
  }
  s.report["metrics_train"] = train_rows;
  s.report["metrics_test"] = test_rows;
  s.report["roc_test"] = roc;
}

std::size_t pick_model(const RunState& s, const std::string& wanted, bool prefer_trees) {
  if (wanted != "auto") {
    for (std::size_t i = 0; i < s.names.size(); ++i)
      if (s.names[i] == wanted) return i;
    throw ConfigError("explain refers to unknown model '" + wanted + "'");
  }
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < s.names.size(); ++i) {
    if (prefer_trees && s.specs[i].family != ModelFamily::gbdt) continue;
    if (!best || s.cv_auroc[i] > s.cv_auroc[*best]) best = i;
  }
  if (!best) return pick_model(s, wanted, false);
  return *best;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

void stage_explain(RunState& s, Exec exec) {
  const auto& cfg = s.cfg;
  const auto& xc = cfg.explain;
  json ex = json::object();
  json notes = json::array();

  const std::size_t mi = pick_model(s, xc.model, true);
  const FittedModel& fm = s.fitted[mi];
  ex["model"] = s.names[mi];
  const Matrix x_train = apply_matrix(fm.pipeline, s.train, exec);
  const Matrix x_test = apply_matrix(fm.pipeline, s.test, exec);
  const BatchModel margin = [&fm](const Matrix& m) { return decision_function(fm.model, m); };

  if (const auto* gb = std::get_if<GbdtModel>(&fm.model.model)) {
    const Matrix bg = background_sample(x_train, xc.shap_background, derive_seed(cfg.seed, kShapBackground));
    const ShapMatrix sh = shap_tree(*gb, x_test, bg, exec);
    ex["shap"] = {{"features", s.selected},
                  {"base_value", sh.base_value},
                  {"background_rows", bg.rows()},
                  {"phi", matrix_json(sh.phi)},
                  {"values", matrix_json(x_test)}};
  } else {
    ex["shap"] = nullptr;
    notes.push_back("tree attributions skipped: " + s.names[mi] + " is not a boosted-tree model");
  }

  json ale_curves = json::array();
  const auto& schema = fm.pipeline.schema;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (schema[j].kind == FeatureKind::categorical) {
      notes.push_back("ALE skipped for categorical feature '" + schema[j].name + "'");
      continue;
    }
    AleCurve c = ale(margin, x_train, j, xc.ale_bins, schema[j].kind == FeatureKind::binary);
    c.feature = schema[j].name;
    const auto& sc = fm.pipeline.scaler;
    if (!c.binary && j < sc.active.size() && sc.active[j] && sc.sd[j] > 0.0)
      for (auto& e : c.edges) e = e * sc.sd[j] + sc.mean[j];
    ale_curves.push_back(to_json(c));
  }
  ex["ale"] = ale_curves;

  const std::size_t ai = pick_model(s, xc.ablation_model, true);
  ex["ablation"] = to_json(ablation(s.train, s.test, s.specs[ai], cfg.preprocess, s.selected, xc.ablation_bootstrap,
                                    derive_seed(cfg.seed, kAblation), exec));
  ex["ablation"]["model"] = s.names[ai];

  {
    PosteriorInputsConfig pc = xc.posterior_inputs;
    pc.dream.seed = derive_seed(cfg.seed, kPosteriorInputs);
    const CohortSummary summary = summarize(s.train, true);
    ex["posterior_inputs"] = to_json(posterior_risk_inputs(fm, summary.nonsurvivors, pc, exec));
  }

  if (xc.posterior_params_enabled) {
    if (xc.posterior_row >= s.test.rows()) throw ConfigError("explain.posterior_row is outside the test set");
    PipelineConfig plain = cfg.preprocess;
    plain.passthrough_categorical = false;
    const FittedPipeline pipe = fit_pipeline(s.train, plain);
    const Matrix xt = apply_matrix(pipe, s.train, exec);
    const Matrix xq = apply_matrix(pipe, s.test, exec);
    PosteriorParamsConfig pc = xc.posterior_params;
    pc.dream.seed = derive_seed(cfg.seed, kPosteriorParams);
    json r = to_json(posterior_risk_params(xt, s.train.labels(), xq.row(xc.posterior_row), pc, exec));
    r["row"] = xc.posterior_row;
    ex["posterior_params"] = r;
  } else {
    ex["posterior_params"] = nullptr;
  }
  ex["notes"] = notes;
  s.report["explain"] = ex;
}

void write_report(const RunState& s) {
  write_text(s.cfg.output_dir / "report.json", s.report.dump(1) + "\n");
  emit_projections(s.report, s.cfg.output_dir);
}

RunState base_state(const RunConfig& config) {
  validate(config);
  RunState s;
  s.cfg = config;
  s.report["format"] = "icurisk-report";
  s.report["version"] = 1;
  s.report["seed"] = config.seed;
  s.report["config_hash"] = config_hash(config);
  return s;
}

}  // namespace

nlohmann::json fit_training_state(const RunConfig& config, const CohortTable& cohort, const SplitIndex& split,
                                  Exec exec) {
  RunState s;
  s.cfg = config;
  s.cohort = cohort;
  s.split = split;
  s.persist = false;
  stage_select(s, exec);
  stage_models(s, exec);
  json fitted = json::array();
  for (const auto& f : s.fitted) fitted.push_back(to_json(f));
  return {{"selection", s.report["selection"]}, {"models", s.report["models"]}, {"fitted", fitted}};
}

CohortTable make_cohort(const RunConfig& cfg) {
  if (cfg.cohort_path) return load_cohort(*cfg.cohort_path, cohort_schema(cfg));
  if (cfg.schema_path) throw ConfigError("schema_path applies to file cohorts; synthetic cohorts use their own schema");
  const CohortSummary summary = synth_summary(cfg.synth);
  return synth_cohort(summary, cfg.synth.n, cfg.synth.event_rate, synth_missing_rates(cfg.synth, summary.schema),
                      derive_seed(cfg.seed, kSynth));
}

RunManifest write_synthetic_cohort(const RunConfig& config) {
  validate(config);
  std::filesystem::create_directories(config.output_dir);
  StageRunner runner(config.output_dir, config_hash(config));
  runner.run("synth", [&] {
    const CohortTable cohort = make_cohort(config);
    save_schema(cohort.schema(), config.output_dir / "schema.json");
    save_cohort(cohort, config.output_dir / "cohort.csv");
  });
  return runner.finish();
}

RunManifest run_pipeline(const RunConfig& config, Exec exec) {
  RunState s = base_state(config);
  prepare_output(config.output_dir);
  json snapshot = to_json(config);
  snapshot.erase("output_dir");
  write_text(config.output_dir / "config.json", snapshot.dump(2) + "\n");
  StageRunner runner(config.output_dir, s.report["config_hash"].get<std::string>());
  runner.run("dataset", [&] { stage_dataset(s, exec); });
  runner.run("select", [&] { stage_select(s, exec); });
  runner.run("models", [&] { stage_models(s, exec); });
  runner.run("eval", [&] { stage_eval(s, exec); });
  if (config.explain.enabled) runner.run("explain", [&] { stage_explain(s, exec); });
  else s.report["explain"] = nullptr;
  runner.run("report", [&] { write_report(s); });
  return runner.finish();
}

RunManifest run_explain(const RunConfig& config, Exec exec) {
  RunState s = base_state(config);
  const auto& dir = config.output_dir;
  StageRunner runner(dir, s.report["config_hash"].get<std::string>());
  if (std::filesystem::exists(dir / "manifest.json")) {
    std::vector<StageTiming> earlier;
    for (auto& st : manifest_from_json(json::parse(read_text(dir / "manifest.json"))).stages)
      if (st.name != "load" && st.name != "explain" && st.name != "report") earlier.push_back(std::move(st));
    runner.keep_stages(std::move(earlier));
  }
  runner.run("load", [&] {
    if (!std::filesystem::exists(dir / "report.json")) throw DataError("no earlier run in " + dir.string());
    s.report = json::parse(read_text(dir / "report.json"));
    if (s.report.value("config_hash", std::string()) != config_hash(config))
      log_warning("config differs from the one that produced " + (dir / "report.json").string());
    const Schema schema = load_schema(dir / "schema.json");
    s.cohort = load_cohort(dir / "cohort.csv", schema);
    s.split = split_from_json(json::parse(read_text(dir / "split.json")));
    s.selected = s.report.at("selection").at("selected").get<std::vector<std::string>>();
    s.train = s.cohort.subset(s.split.train_rows).select_features(s.selected);
    s.test = s.cohort.subset(s.split.test_rows).select_features(s.selected);
    for (const auto& m : s.report.at("models")) {
      const auto name = m.at("name").get<std::string>();
      const json art = json::parse(read_text(model_path(dir, name)));
      s.names.push_back(name);
      s.specs.push_back(model_spec_from_json(art.at("spec")));
      const auto& cv = m.at("cv");
      s.cv_auroc.push_back(cv.at("configs").at(cv.at("best").get<std::size_t>()).at("mean_auroc").get<double>());
      s.fitted.push_back(fitted_model_from_json(art.at("fitted")));
    }
  });
  runner.run("explain", [&] { stage_explain(s, exec); });
  runner.run("report", [&] {
    prepare_output(dir);
    write_report(s);
  });
  return runner.finish();
}

}  // namespace icurisk
