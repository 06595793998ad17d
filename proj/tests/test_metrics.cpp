#include <gtest/gtest.h>
#include <cmath>

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>

#include "fixtures.hpp"
#include "icurisk/error.hpp"
#include "icurisk/metrics.hpp"

using namespace icurisk;
using namespace icurisk::testing;

namespace {

double pairwise(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        den += 1;
      }
  return num / den;
}

void binormal(std::size_t n, double shift, std::uint64_t seed, std::vector<double>& s, std::vector<int>& y) {
  Rng rng = make_rng(seed);
  s.resize(n);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2;
    s[i] = shift * y[i] + standard_normal(rng);
  }
}

}  // namespace

TEST(Auroc, Examples) {
  EXPECT_EQ(auroc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}), 1.0);
  EXPECT_EQ(auroc(std::vector<double>{0.3, 0.3, 0.3}, std::vector<int>{0, 1, 1}), 0.5);
  EXPECT_EQ(auroc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}), 0.75);
  EXPECT_THROW(auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), DataError);
}

TEST(Auroc, EqualsPairwiseConcordance) {
  Rng rng = make_rng(2);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 60);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i < 2 ? static_cast<int>(i) : uniform01(rng) < 0.5;
      s[i] = static_cast<double>(uniform_index(rng, 8));
    }
    EXPECT_EQ(auroc(s, y), pairwise(s, y));
    EXPECT_EQ(auroc(s, y), auroc_pairwise(s, y));
  }
}

TEST(Bootstrap, PerfectSeparationAndDeterminism) {
  const std::vector<double> s{0.1, 0.2, 0.3, 0.7, 0.8, 0.9};
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  const Interval ci = bootstrap_auroc_ci(s, y, 500, 3);
  EXPECT_EQ(ci.low, 1.0);
  EXPECT_EQ(ci.high, 1.0);
  std::vector<double> a;
  std::vector<int> b;
  binormal(300, 1.0, 1, a, b);
  const auto serial = bootstrap_auroc(a, b, 400, 9, Exec::serial);
  EXPECT_EQ(serial, bootstrap_auroc(a, b, 400, 9, Exec::parallel));
  EXPECT_EQ(serial, bootstrap_auroc(a, b, 400, 9, Exec::serial));
  EXPECT_NE(serial, bootstrap_auroc(a, b, 400, 10, Exec::serial));
}

TEST(Bootstrap, WidthShrinksWithRootN) {
  std::vector<double> s1, s2;
  std::vector<int> y1, y2;
  binormal(500, 1.0, 4, s1, y1);
  binormal(2000, 1.0, 5, s2, y2);
  const Interval a = bootstrap_auroc_ci(s1, y1, 2000, 1), b = bootstrap_auroc_ci(s2, y2, 2000, 1);
  const double ratio = (a.high - a.low) / (b.high - b.low);
  EXPECT_GT(ratio, 1.6);
  EXPECT_LT(ratio, 2.4);
}

TEST(Percentile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4, 5}, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(percentile({4, 1, 3, 2}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(percentile({4, 1, 3, 2}, 1.0), 4.0);
}

TEST(Threshold, PerfectSeparationTakesLowestMidpoint) {
  const std::vector<double> s{0.1, 0.2, 0.6, 0.9};
  const std::vector<int> y{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(tune_threshold(s, y), 0.4);
}

TEST(Threshold, YoudenMatchesExhaustiveScan) {
  Rng rng = make_rng(8);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> s(40);
    std::vector<int> y(40);
    for (std::size_t i = 0; i < 40; ++i) {
      y[i] = i < 2 ? static_cast<int>(i) : uniform01(rng) < 0.3;
      s[i] = static_cast<double>(uniform_index(rng, 15)) / 10.0 + 0.3 * y[i];
    }
    std::vector<double> u = s;
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    // Thresholding at each distinct value enumerates every partition; the
    // lowest best partition must be reproduced with a threshold in (u[k-1], u[k]].
    double best_j = -2;
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      const MetricReport m = confusion_metrics(s, y, u[k]);
      const double j = *m.sensitivity + *m.specificity - 1;
      if (j > best_j + 1e-12) best_j = j, best_k = k;
    }
    const double thr = tune_threshold(s, y);
    EXPECT_LE(thr, u[best_k]);
    if (best_k > 0) {
      EXPECT_GT(thr, u[best_k - 1]);
    }
    const MetricReport got = confusion_metrics(s, y, thr);
    EXPECT_NEAR(*got.sensitivity + *got.specificity - 1, best_j, 1e-12);
  }
}

TEST(Threshold, AdjacentDoublesKeepTheirSide) {
  const double lo = 1.4, hi = std::nextafter(1.4, 2.0);
  const std::vector<double> s{0.5, lo, hi, 2.0};
  const std::vector<int> y{0, 0, 1, 1};
  const double thr = tune_threshold(s, y);
  EXPECT_GT(thr, lo);
  EXPECT_EQ(*confusion_metrics(s, y, thr).specificity, 1.0);
}

TEST(Threshold, SensitivityFloor) {
  const std::vector<double> s{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
  const std::vector<int> y{0, 1, 0, 1, 0, 1, 1, 0, 1, 1};
  ThresholdPolicy p;
  p.kind = ThresholdPolicy::Kind::sensitivity_floor;
  p.min_sensitivity = 0.8;
  const double thr = tune_threshold(s, y, p);
  EXPECT_GE(*confusion_metrics(s, y, thr).sensitivity, 0.8);
  // Candidates are the minimum and midpoints; 0.35 is the last one keeping 5 of 6 positives.
  EXPECT_DOUBLE_EQ(thr, 0.35);
  EXPECT_LT(*confusion_metrics(s, y, 0.45).sensitivity, 0.8);
  EXPECT_EQ(threshold_policy_from_json(to_json(p)).min_sensitivity, 0.8);
}

TEST(Confusion, KnownCounts) {
  ConfusionCounts c;
  c.tp = 36;
  c.fn = 7;
  c.tn = 288;
  c.fp = 59;
  const MetricReport m = metrics_from_counts(c);
  EXPECT_NEAR(*m.accuracy, 0.831, 5e-4);
  EXPECT_NEAR(*m.f1, 0.522, 5e-4);
  EXPECT_NEAR(*m.sensitivity, 0.837, 5e-4);
  EXPECT_NEAR(*m.specificity, 0.830, 5e-4);
  EXPECT_NEAR(*m.ppv, 0.379, 5e-4);
  EXPECT_NEAR(*m.npv, 0.976, 5e-4);
}

TEST(Confusion, DegenerateCases) {
  const std::vector<double> s{0.1, 0.9, 0.2, 0.8};
  const MetricReport all = confusion_metrics(s, std::vector<int>{0, 1, 0, 1}, 0.5);
  for (auto v : {all.accuracy, all.f1, all.sensitivity, all.specificity, all.ppv, all.npv}) EXPECT_EQ(*v, 1.0);
  const MetricReport neg = confusion_metrics(s, std::vector<int>{0, 0, 0, 0}, 0.95);
  EXPECT_EQ(*neg.specificity, 1.0);
  EXPECT_FALSE(neg.sensitivity);
  EXPECT_FALSE(neg.ppv);
  EXPECT_FALSE(neg.f1);
  const std::string csv = metrics_csv(std::vector<MetricReport>{neg});
  EXPECT_NE(csv.find("NA"), std::string::npos);
}

TEST(Roc, CurveEndpointsAndArea) {
  std::vector<double> s;
  std::vector<int> y;
  binormal(200, 1.0, 7, s, y);
  for (auto& v : s) v = std::round(v * 4) / 4;  // ties
  const auto pts = roc_curve(s, y);
  EXPECT_EQ(pts.front().fpr, 0.0);
  EXPECT_EQ(pts.front().tpr, 0.0);
  EXPECT_TRUE(std::isinf(pts.front().threshold));
  EXPECT_EQ(pts.back().fpr, 1.0);
  EXPECT_EQ(pts.back().tpr, 1.0);
  double area = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    EXPECT_GE(pts[i].fpr, pts[i - 1].fpr);
    EXPECT_GE(pts[i].tpr, pts[i - 1].tpr);
    area += (pts[i].fpr - pts[i - 1].fpr) * (pts[i].tpr + pts[i - 1].tpr) / 2;
  }
  EXPECT_NEAR(area, auroc(s, y), 1e-12);
}

TEST(Welch, AgainstStudentT) {
  struct Case {
    double m1, s1, n1, m2, s2, n2;
  };
  for (const Case& c : {Case{69.74, 9.31, 911, 69.52, 8.88, 390}, Case{36.24, 15.45, 911, 36.44, 14.60, 390},
                        Case{12.97, 3.35, 911, 12.52, 3.21, 390}, Case{1, 2, 5, 4, 0.5, 3}}) {
    const WelchResult r = welch_t(c.m1, c.s1, c.n1, c.m2, c.s2, c.n2);
    const double a = c.s1 * c.s1 / c.n1, b = c.s2 * c.s2 / c.n2;
    const double df = (a + b) * (a + b) / (a * a / (c.n1 - 1) + b * b / (c.n2 - 1));
    const double t = (c.m1 - c.m2) / std::sqrt(a + b);
    boost::math::students_t dist(df);
    const double p = 2 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    EXPECT_NEAR(r.df, df, 1e-9 * df);
    EXPECT_NEAR(r.t, t, 1e-12);
    EXPECT_NEAR(r.p, p, 1e-10);
  }
}

TEST(Welch, SummaryStatisticPValues) {
  EXPECT_NEAR(welch_t(69.74, 9.31, 911, 69.52, 8.88, 390).p, 0.687, 0.01);
  EXPECT_NEAR(welch_t(36.24, 15.45, 911, 36.44, 14.60, 390).p, 0.827, 0.01);
  EXPECT_LT(welch_t(22.90, 17.85, 911, 20.03, 11.82, 390).p, 0.001);
  EXPECT_NEAR(welch_t(12.97, 3.35, 911, 12.52, 3.21, 390).p, 0.023, 0.005);
}

TEST(Welch, Degenerate) {
  const WelchResult same = welch_t(5, 1, 10, 5, 1, 10);
  EXPECT_EQ(same.t, 0.0);
  EXPECT_EQ(same.p, 1.0);
  const WelchResult flat = welch_t(5, 0, 10, 6, 0, 10);
  EXPECT_TRUE(std::isinf(flat.t));
  EXPECT_EQ(flat.p, 0.0);
  EXPECT_THROW(welch_t(1, 1, 1, 1, 1, 5), ConfigError);
}

TEST(IncompleteBeta, KnownValues) {
  EXPECT_NEAR(incomplete_beta(1, 1, 0.3), 0.3, 1e-14);
  EXPECT_NEAR(incomplete_beta(2, 3, 0.4), 0.5248, 1e-12);  // 1 - (0.6^4 + 4 * 0.4 * 0.6^3)
  EXPECT_NEAR(incomplete_beta(0.5, 0.5, 0.5), 0.5, 1e-12);
}

TEST(CompareCohorts, SmallGroupsAreNoted) {
  const CohortTable a = table({continuous("x"), continuous("y")}, {{1, 1}, {2, NAN}, {3, NAN}}, {0, 1, 0});
  const CohortTable b = table({continuous("x"), continuous("y")}, {{2, 5}, {4, 6}}, {0, 1});
  const auto rows = compare_cohorts(a, b);
  ASSERT_EQ(rows.size(), 2u);
  ASSERT_TRUE(rows[0].result);
  EXPECT_FALSE(rows[1].result);
  EXPECT_FALSE(rows[1].note.empty());
  EXPECT_EQ(to_json(cohort_comparison_from_json(to_json(rows[0]))), to_json(rows[0]));
}
