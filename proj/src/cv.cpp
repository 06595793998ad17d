#include "icurisk/cv.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "icurisk/error.hpp"
#include "icurisk/metrics.hpp"
#include "icurisk/rng.hpp"

namespace icurisk {

std::vector<std::size_t> CvPlan::training_rows(std::size_t fold, std::size_t n) const {
  std::vector<bool> held(n, false);
  for (std::size_t r : folds.at(fold)) held[r] = true;
  std::vector<std::size_t> out;
  out.reserve(n - folds[fold].size());
  for (std::size_t r = 0; r < n; ++r)
    if (!held[r]) out.push_back(r);
  return out;
}

CvPlan stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("cross-validation needs k >= 2");
  CvPlan plan;
  plan.seed = seed;
  plan.folds.resize(k);
  std::size_t next = 0;
  for (int c = 0; c < 2; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if ((labels[i] == 1) == (c == 1)) idx.push_back(i);
    if (idx.size() < k)
      throw StratificationError("class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                                " rows, fewer than " + std::to_string(k) + " folds");
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(c));
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
    for (std::size_t r : idx) {
      plan.folds[next].push_back(r);
      next = (next + 1) % k;
    }
  }
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

std::vector<double> FittedModel::predict_proba(const CohortTable& table, Exec exec) const {
  return icurisk::predict_proba(model, apply_matrix(pipeline, table, exec));
}

nlohmann::json to_json(const FittedModel& m) {
  return {{"format", "icurisk-fitted-model"}, {"version", 1}, {"pipeline", to_json(m.pipeline)},
          {"model", to_json(m.model)}};
}

FittedModel fitted_model_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "icurisk-fitted-model" || j.value("version", 0) != 1)
    throw DataError("not an icurisk-fitted-model v1 artifact");
  return {pipeline_from_json(j.at("pipeline")), trained_model_from_json(j.at("model"))};
}

FittedModel fit_model(const CohortTable& train, const ModelSpec& spec, const PipelineConfig& pipeline,
                      std::uint64_t seed, Exec exec) {
  PipelineConfig cfg = pipeline;
  cfg.passthrough_categorical = spec.wants_raw_categoricals();
  FittedModel out;
  out.pipeline = fit_pipeline(train, cfg);
  const Matrix x = apply_matrix(out.pipeline, train, exec);
  const auto w = out.pipeline.weights.per_sample(train.labels());
  const auto cats = passthrough_columns(out.pipeline);
  out.model = icurisk::train(spec, x, train.labels(), w, seed, cats);
  return out;
}

GridSearchResult cross_validate(const CohortTable& train, std::span<const ModelSpec> grid,
                                const PipelineConfig& pipeline, std::size_t k, std::uint64_t seed,
                                Exec exec) {
  if (grid.empty()) throw ConfigError("grid search needs at least one configuration");
  const std::size_t n = train.rows();
  const CvPlan plan = stratified_kfold(train.labels(), k, seed);

  // Fold data per passthrough flag; only the variants some config needs.
  struct FoldData {
    Matrix x_train, x_val;
    std::vector<int> y_train, y_val;
    std::vector<double> w_train;
    std::vector<std::size_t> categorical;
  };
  std::map<bool, std::vector<FoldData>> folds;
  for (const auto& spec : grid) folds[spec.wants_raw_categoricals()];
  for (auto& [raw, data] : folds) {
    data.resize(k);
    PipelineConfig cfg = pipeline;
    cfg.passthrough_categorical = raw;
    for (std::size_t f = 0; f < k; ++f) {
      const auto tr_rows = plan.training_rows(f, n);
      const CohortTable tr = train.subset(tr_rows);
      const CohortTable va = train.subset(plan.folds[f]);
      const FittedPipeline p = fit_pipeline(tr, cfg, tr_rows);
      auto& d = data[f];
      d.x_train = apply_matrix(p, tr, exec);
      d.x_val = apply_matrix(p, va, exec);
      d.y_train = tr.labels();
      d.y_val = va.labels();
      d.w_train = p.weights.per_sample(d.y_train);
      d.categorical = passthrough_columns(p);
    }
  }

  const std::size_t n_tasks = grid.size() * k;
  std::vector<std::vector<double>> preds(n_tasks);
  std::vector<double> fold_auc(n_tasks);
  auto run_task = [&](std::size_t t) {
    const std::size_t c = t / k, f = t % k;
    const auto& d = folds.at(grid[c].wants_raw_categoricals())[f];
    const auto model = icurisk::train(grid[c], d.x_train, d.y_train, d.w_train,
                                      derive_seed(derive_seed(seed, f), c), d.categorical);
    preds[t] = predict_proba(model, d.x_val);
    fold_auc[t] = auroc(preds[t], d.y_val);
  };
  if (exec == Exec::parallel) {
    // Exceptions cannot cross the OpenMP region; rethrow the first one after.
    std::vector<std::exception_ptr> errors(n_tasks);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(n_tasks); ++t) {
      try {
        run_task(static_cast<std::size_t>(t));
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (std::size_t t = 0; t < n_tasks; ++t) run_task(t);
  }

  GridSearchResult result;
  result.name = grid.front().name;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    ConfigScore s;
    s.spec = grid[c];
    for (std::size_t f = 0; f < k; ++f) s.fold_auroc.push_back(fold_auc[c * k + f]);
    double sum = 0.0;
    for (double a : s.fold_auroc) sum += a;
    s.mean_auroc = sum / static_cast<double>(k);
    double ss = 0.0;
    for (double a : s.fold_auroc) ss += (a - s.mean_auroc) * (a - s.mean_auroc);
    s.sd_auroc = std::sqrt(ss / static_cast<double>(k - 1));
    result.configs.push_back(std::move(s));
  }
  for (std::size_t c = 1; c < result.configs.size(); ++c)
    if (result.configs[c].mean_auroc > result.configs[result.best].mean_auroc) result.best = c;

  result.oof_scores.assign(n, 0.0);
  for (std::size_t f = 0; f < k; ++f) {
    const auto& p = preds[result.best * k + f];
    for (std::size_t i = 0; i < plan.folds[f].size(); ++i) result.oof_scores[plan.folds[f][i]] = p[i];
  }
  return result;
}

nlohmann::json to_json(const GridSearchResult& r) {
  nlohmann::json configs = nlohmann::json::array();
  for (const auto& c : r.configs)
    configs.push_back({{"spec", to_json(c.spec)},
                       {"fold_auroc", c.fold_auroc},
                       {"mean_auroc", c.mean_auroc},
                       {"sd_auroc", c.sd_auroc}});
  return {{"name", r.name}, {"configs", configs}, {"best", r.best}, {"oof_scores", r.oof_scores}};
}

GridSearchResult grid_search_from_json(const nlohmann::json& j) {
  GridSearchResult r;
  r.name = j.at("name").get<std::string>();
  for (const auto& c : j.at("configs")) {
    ConfigScore s;
    s.spec = model_spec_from_json(c.at("spec"));
    s.fold_auroc = c.at("fold_auroc").get<std::vector<double>>();
    s.mean_auroc = c.at("mean_auroc").get<double>();
    s.sd_auroc = c.at("sd_auroc").get<double>();
    r.configs.push_back(std::move(s));
  }
  r.best = j.at("best").get<std::size_t>();
  r.oof_scores = j.at("oof_scores").get<std::vector<double>>();
  return r;
}

}  // namespace icurisk
