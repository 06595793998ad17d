#include "icurisk/ablation.hpp"

#include <cmath>

#include "icurisk/error.hpp"
#include "icurisk/metrics.hpp"
#include "icurisk/rng.hpp"

namespace icurisk {

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
}

}  // namespace

AblationReport ablation(const CohortTable& train, const CohortTable& test, const ModelSpec& spec,
                        const PipelineConfig& pipeline, std::span<const std::string> features, int B,
                        std::uint64_t seed, Exec exec) {
  if (B < 1) throw ConfigError("ablation needs B >= 1");
  const std::uint64_t model_seed = derive_seed(seed, 0);
  const std::uint64_t boot_seed = derive_seed(seed, 1);

  AblationReport rep;
  rep.model = spec.name;
  {
    const auto fm = fit_model(train, spec, pipeline, model_seed, exec);
    const auto p = fm.predict_proba(test, exec);
    rep.baseline_auroc = auroc(p, test.labels());
    rep.baseline_distribution = bootstrap_auroc(p, test.labels(), B, boot_seed, exec);
    std::tie(rep.baseline_mean, rep.baseline_sd) = mean_sd(rep.baseline_distribution);
  }

  rep.entries.resize(features.size());
  auto run = [&](std::size_t f) {
    AblationEntry& e = rep.entries[f];
    e.feature = features[f];
    if (train.cols() <= 1) {
      e.note = "skipped: removing it leaves no features";
      return;
    }
    const CohortTable tr = train.drop_feature(features[f]);
    const CohortTable te = test.drop_feature(features[f]);
    const auto fm = fit_model(tr, spec, pipeline, model_seed, Exec::serial);
    const auto p = fm.predict_proba(te, Exec::serial);
    e.auroc = auroc(p, te.labels());
    e.distribution = bootstrap_auroc(p, te.labels(), B, boot_seed, Exec::serial);
    std::tie(e.mean, e.sd) = mean_sd(e.distribution);
  };
  if (exec == Exec::parallel) {
    std::vector<std::exception_ptr> errors(features.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t f = 0; f < static_cast<std::ptrdiff_t>(features.size()); ++f) {
      try {
        run(static_cast<std::size_t>(f));
      } catch (...) {
        errors[static_cast<std::size_t>(f)] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (std::size_t f = 0; f < features.size(); ++f) run(f);
  }
  return rep;
}

nlohmann::json to_json(const AblationReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"feature", e.feature},
                       {"auroc", e.auroc},
                       {"mean", e.mean},
                       {"sd", e.sd},
                       {"note", e.note},
                       {"distribution", e.distribution}});
  return {{"model", r.model},
          {"baseline_auroc", r.baseline_auroc},
          {"baseline_mean", r.baseline_mean},
          {"baseline_sd", r.baseline_sd},
          {"baseline_distribution", r.baseline_distribution},
          {"entries", entries}};
}

AblationReport ablation_from_json(const nlohmann::json& j) {
  AblationReport r;
  r.model = j.at("model").get<std::string>();
  r.baseline_auroc = j.at("baseline_auroc").get<double>();
  r.baseline_mean = j.at("baseline_mean").get<double>();
  r.baseline_sd = j.at("baseline_sd").get<double>();
  r.baseline_distribution = j.at("baseline_distribution").get<std::vector<double>>();
  for (const auto& e : j.at("entries")) {
    AblationEntry a;
    a.feature = e.at("feature").get<std::string>();
    a.auroc = e.at("auroc").get<double>();
    a.mean = e.at("mean").get<double>();
    a.sd = e.at("sd").get<double>();
    a.note = e.value("note", std::string());
    a.distribution = e.at("distribution").get<std::vector<double>>();
    r.entries.push_back(std::move(a));
  }
  return r;
}

}  // namespace icurisk
