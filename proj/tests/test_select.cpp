#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "icurisk/config.hpp"
#include "icurisk/select.hpp"

using namespace icurisk;
using namespace icurisk::testing;

namespace {

bool has_reason(const CoverageDecision& d, DropReason r) {
  return std::find(d.reasons.begin(), d.reasons.end(), r) != d.reasons.end();
}

double direct_mi(const std::vector<std::vector<double>>& counts) {
  double n = 0;
  std::vector<double> row(counts.size(), 0.0), col(counts[0].size(), 0.0);
  for (std::size_t i = 0; i < counts.size(); ++i)
    for (std::size_t j = 0; j < counts[i].size(); ++j) {
      n += counts[i][j];
      row[i] += counts[i][j];
      col[j] += counts[i][j];
    }
  double mi = 0;
  for (std::size_t i = 0; i < counts.size(); ++i)
    for (std::size_t j = 0; j < counts[i].size(); ++j)
      if (counts[i][j] > 0) mi += counts[i][j] / n * std::log(counts[i][j] * n / (row[i] * col[j]));
  return mi;
}

}  // namespace

TEST(CoverageFilter, Rules) {
  const std::size_t n = 1301;
  std::vector<std::vector<double>> rows(n);
  std::vector<int> y(n);
  for (std::size_t r = 0; r < n; ++r) {
    y[r] = r % 5 == 0;
    rows[r] = {r % 4 == 0 ? NAN : 1.0 * r,   // 25% missing
               r < 99 ? 1.0 * r : NAN,      // documented in 99 rows
               3.0,                         // constant
               0.5 * r};                    // fine
  }
  const CohortTable t = table({continuous("miss"), continuous("rare"), continuous("flat"), continuous("ok")}, rows, y);
  const CoverageReport rep = coverage_filter(t, CoverageFilterConfig{});
  EXPECT_EQ(rep.kept, (std::vector<std::string>{"ok"}));
  ASSERT_EQ(rep.decisions.size(), 4u);
  EXPECT_EQ(rep.decisions[0].reasons, (std::vector<DropReason>{DropReason::missingness}));
  EXPECT_TRUE(has_reason(rep.decisions[1], DropReason::low_documentation));
  EXPECT_EQ(rep.decisions[1].documented, 99u);
  EXPECT_EQ(rep.decisions[2].reasons, (std::vector<DropReason>{DropReason::low_variance}));
  EXPECT_TRUE(rep.decisions[3].kept());
  EXPECT_EQ(to_json(coverage_report_from_json(to_json(rep))), to_json(rep));
}

TEST(MutualInformation, Basics) {
  EXPECT_EQ(mutual_information(std::vector<int>{0, 0, 0, 0}, std::vector<int>{0, 1, 0, 1}), 0.0);
  std::vector<int> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<int>(i % 2);
  EXPECT_NEAR(mutual_information(x, x), std::log(2.0), 1e-12);
}

TEST(MutualInformation, TwoByTwoTable) {
  std::vector<int> x, y;
  const int counts[2][2] = {{4, 1}, {1, 4}};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int c = 0; c < counts[i][j]; ++c) x.push_back(i), y.push_back(j);
  EXPECT_NEAR(mutual_information(x, y), direct_mi({{4, 1}, {1, 4}}), 1e-12);
  // 0.8 ln 1.6 + 0.2 ln 0.4
  EXPECT_NEAR(mutual_information(x, y), 0.8 * std::log(1.6) + 0.2 * std::log(0.4), 1e-12);
}

TEST(MutualInformation, ArbitraryCodes) {
  const std::vector<int> x{-3, 7, 7, -3, 100, 100}, y{0, 1, 1, 0, 1, 0};
  EXPECT_NEAR(mutual_information(x, y), direct_mi({{2, 0}, {0, 2}, {1, 1}}), 1e-12);
}

TEST(QuantileCuts, BinsAndCollapse) {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  const auto cuts = quantile_cuts(v, 10);
  EXPECT_EQ(cuts.size(), 9u);
  std::vector<int> per_bin(10, 0);
  for (double x : v) ++per_bin[bin_of(x, cuts)];
  for (int c : per_bin) EXPECT_EQ(c, 10);
  EXPECT_TRUE(quantile_cuts(std::vector<double>(50, 2.0), 10).size() <= 1);
}

TEST(RankFeatures, InformativeBeforeNoiseAndCopiesTie) {
  CohortTable base = separable(2000, 31);
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < base.rows(); ++r) rows.push_back({*base.at(r, 0), *base.at(r, 2), *base.at(r, 0)});
  const CohortTable t = table({continuous("A"), continuous("B"), continuous("A_copy")}, rows, base.labels());
  const MIRanking rk = rank_features(t, SelectConfig{}, 3);
  auto score = [&](const std::string& f) {
    return *std::find_if(rk.scores.begin(), rk.scores.end(), [&](const MIScore& s) { return s.feature == f; });
  };
  EXPECT_LT(score("A").rank, score("B").rank);
  EXPECT_NEAR(score("A").mi, score("A_copy").mi, 1e-12);
  EXPECT_LT(score("B").mi, 0.01);
  EXPECT_TRUE(score("B").near_zero || score("B").mi < 0.01);
  EXPECT_EQ(rk.scores.front().feature, "A");  // ties go alphabetically
}

TEST(RankFeatures, DefaultSchemaSelectsAll17) {
  const auto summary = default_class_moments();
  const CohortTable t = synth_cohort(summary, 5000, 0.196, {}, 3);
  const MIRanking rk = rank_features(t, SelectConfig{}, 17);
  EXPECT_EQ(rk.selected.size(), 17u);
  EXPECT_EQ(rk.scores.size(), 17u);
  for (std::size_t i = 0; i + 1 < rk.scores.size(); ++i) EXPECT_GE(rk.scores[i].mi, rk.scores[i + 1].mi);
}

TEST(RankFeatures, DecoysAreRejected) {
  SynthConfig cfg;
  const CohortSummary s = synth_summary(cfg);
  const CohortTable t = synth_cohort(s, 1301, 0.196, synth_missing_rates(cfg, s.schema), 42);
  const CoverageReport cov = coverage_filter(t, CoverageFilterConfig{});
  for (const char* name : {"Glucose", "GCS Total", "Isolation Flag"})
    EXPECT_EQ(std::count(cov.kept.begin(), cov.kept.end(), name), 0) << name;
  const MIRanking rk = rank_features(t.select_features(cov.kept), SelectConfig{}, 17);
  EXPECT_EQ(std::count(rk.selected.begin(), rk.selected.end(), "Oxygen Device Type"), 0);
}
