#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "icurisk/cv.hpp"
#include "icurisk/error.hpp"
#include "icurisk/metrics.hpp"

using namespace icurisk;
using namespace icurisk::testing;

namespace {

ModelSpec logreg(const std::string& name, const char* penalty, double c) {
  return {name, ModelFamily::logistic_regression, {{"penalty", penalty}, {"C", c}}};
}

}  // namespace

TEST(Kfold, PartitionAndStratification) {
  std::vector<int> y(103);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 5 == 0;
  const std::size_t P = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  const CvPlan plan = stratified_kfold(y, 5, 11);
  ASSERT_EQ(plan.folds.size(), 5u);
  std::vector<int> seen(y.size(), 0);
  std::size_t lo = y.size(), hi = 0;
  for (std::size_t f = 0; f < 5; ++f) {
    const auto& fold = plan.folds[f];
    lo = std::min(lo, fold.size());
    hi = std::max(hi, fold.size());
    std::size_t pos = 0;
    for (std::size_t r : fold) {
      ++seen[r];
      pos += y[r];
    }
    EXPECT_LT(std::abs(static_cast<double>(pos) - static_cast<double>(P) / 5.0), 1.0);
    const auto tr = plan.training_rows(f, y.size());
    EXPECT_EQ(tr.size() + fold.size(), y.size());
    std::set<std::size_t> both(tr.begin(), tr.end());
    for (std::size_t r : fold) EXPECT_FALSE(both.count(r));
  }
  EXPECT_LE(hi - lo, 1u);
  for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(Kfold, DeterministicPerSeed) {
  std::vector<int> y(60);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 3 == 0;
  EXPECT_EQ(stratified_kfold(y, 4, 1).folds, stratified_kfold(y, 4, 1).folds);
  EXPECT_NE(stratified_kfold(y, 4, 1).folds, stratified_kfold(y, 4, 2).folds);
}

TEST(Kfold, TooFewMembersThrows) {
  std::vector<int> y(40, 0);
  y[0] = y[1] = y[2] = 1;
  EXPECT_THROW(stratified_kfold(y, 5, 1), StratificationError);
  EXPECT_NO_THROW(stratified_kfold(y, 3, 1));
}

TEST(GridSearch, SingleConfigWins) {
  const CohortTable t = separable(150, 3);
  const std::vector<ModelSpec> grid{logreg("lr", "l2", 1.0)};
  const GridSearchResult r = cross_validate(t, grid, {}, 5, 4);
  ASSERT_EQ(r.configs.size(), 1u);
  EXPECT_EQ(r.best, 0u);
  EXPECT_EQ(r.configs[0].fold_auroc.size(), 5u);
  EXPECT_EQ(r.oof_scores.size(), t.rows());
  EXPECT_GT(r.configs[0].mean_auroc, 0.8);
}

TEST(GridSearch, StrongBeatsWeakAndTiesGoFirst) {
  const CohortTable t = separable(200, 5);
  // An almost-zero L1 budget leaves a constant scorer.
  const std::vector<ModelSpec> grid{logreg("weak", "l1", 1e-7), logreg("strong", "l2", 1.0),
                                    logreg("strong_copy", "l2", 1.0)};
  const GridSearchResult r = cross_validate(t, grid, {}, 4, 6);
  EXPECT_NEAR(r.configs[0].mean_auroc, 0.5, 1e-12);
  EXPECT_EQ(r.best, 1u);
  EXPECT_EQ(r.configs[1].mean_auroc, r.configs[2].mean_auroc);
  EXPECT_EQ(r.best_spec().name, "strong");
  // Out-of-fold AUROC tracks the fold average.
  EXPECT_NEAR(auroc(r.oof_scores, t.labels()), r.configs[1].mean_auroc, 0.05);
}

TEST(GridSearch, SerialEqualsParallelAndReruns) {
  const CohortTable t = separable(160, 7);
  const std::vector<ModelSpec> grid{
      {"gbdt", ModelFamily::gbdt, {{"n_trees", 15}, {"max_depth", 2}}},
      logreg("lr", "l2", 0.1)};
  const GridSearchResult a = cross_validate(t, grid, {}, 4, 8, Exec::serial);
  const GridSearchResult b = cross_validate(t, grid, {}, 4, 8, Exec::parallel);
  const GridSearchResult c = cross_validate(t, grid, {}, 4, 8, Exec::serial);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(to_json(a).dump(), to_json(c).dump());
  EXPECT_EQ(to_json(grid_search_from_json(to_json(a))).dump(), to_json(a).dump());
}

TEST(FittedModel, RoundTripPredictsIdentically) {
  const CohortTable t = separable(120, 9);
  const FittedModel m = fit_model(t, logreg("lr", "l2", 1.0), {}, 10);
  const FittedModel back = fitted_model_from_json(to_json(m));
  EXPECT_EQ(m.predict_proba(t), back.predict_proba(t));
}
