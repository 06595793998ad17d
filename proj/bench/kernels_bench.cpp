// Serial vs OpenMP timings for the parallel kernels. Argument 0 runs the
// serial reference path, 1 the parallel one.

#include <benchmark/benchmark.h>

#include <cmath>

#include "icurisk/ablation.hpp"
#include "icurisk/config.hpp"
#include "icurisk/dream.hpp"
#include "icurisk/metrics.hpp"
#include "icurisk/preprocess.hpp"
#include "icurisk/rng.hpp"
#include "icurisk/run.hpp"
#include "icurisk/shap.hpp"

using namespace icurisk;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

const CohortTable& cohort() {
  static const CohortTable t = [] {
    RunConfig cfg;
    cfg.seed = 11;
    cfg.synth.n = 2000;
    cfg.synth.default_missing_rate = 0.1;
    return make_cohort(cfg);
  }();
  return t;
}

Matrix gaussian(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Matrix x(n, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) x(r, c) = standard_normal(rng);
  return x;
}

void BM_KnnImpute(benchmark::State& state) {
  const KnnImputer imp = fit_imputer(cohort(), 5);
  for (auto _ : state) benchmark::DoNotOptimize(impute(imp, cohort(), exec_of(state)));
}

void BM_BootstrapAuroc(benchmark::State& state) {
  Rng rng = make_rng(3);
  std::vector<double> s(2000);
  std::vector<int> y(2000);
  for (std::size_t i = 0; i < s.size(); ++i) {
    y[i] = uniform01(rng) < 0.2;
    s[i] = y[i] + standard_normal(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_auroc(s, y, 1000, 4, exec_of(state)));
}

void BM_TreeShap(benchmark::State& state) {
  const Matrix x = gaussian(400, 12, 5);
  std::vector<int> y(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) y[r] = x(r, 0) + x(r, 1) * x(r, 2) > 0;
  GbdtParams p;
  p.n_trees = 100;
  const GbdtModel m = train_gbdt(x, y, std::vector<double>(y.size(), 1.0), p, 6);
  const Matrix bg = background_sample(x, 100, 7);
  for (auto _ : state) benchmark::DoNotOptimize(shap_tree(m, x, bg, exec_of(state)));
}

void BM_Dream(benchmark::State& state) {
  const LogDensity logp = [](std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x * x;
    return -0.5 * s;
  };
  DreamConfig cfg;
  cfg.n_chains = 24;
  cfg.n_generations = 2000;
  cfg.seed = 8;
  const Matrix init = gaussian(24, 10, 9);
  for (auto _ : state) benchmark::DoNotOptimize(dream_sample(logp, init, cfg, exec_of(state)));
}

void BM_Ablation(benchmark::State& state) {
  const SplitIndex split = stratified_split(cohort(), 0.7, 10);
  const CohortTable train = cohort().subset(split.train_rows), test = cohort().subset(split.test_rows);
  const std::vector<std::string> feats{"Age", "BUN", "PTT", "Anion gap"};
  const ModelSpec spec{"lr", ModelFamily::logistic_regression, {{"penalty", "l2"}, {"C", 1.0}}};
  for (auto _ : state)
    benchmark::DoNotOptimize(ablation(train, test, spec, {}, feats, 200, 12, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_KnnImpute)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BootstrapAuroc)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TreeShap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Dream)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Ablation)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
