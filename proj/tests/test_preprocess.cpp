#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "fixtures.hpp"
#include "icurisk/error.hpp"
#include "icurisk/preprocess.hpp"

using namespace icurisk;
using namespace icurisk::testing;

TEST(KnnImputer, NearestRowSuppliesValue) {
  const CohortTable t = table({continuous("a"), continuous("b")}, {{1, 2}, {1, NAN}, {5, 6}}, {0, 1, 0});
  const CohortTable out = impute(fit_imputer(t, 1), t);
  EXPECT_EQ(*out.at(1, 1), 2.0);
  EXPECT_EQ(out.missing_count(), 0u);
}

TEST(KnnImputer, CompleteTableUnchanged) {
  const CohortTable t = separable(50, 1);
  const KnnImputer imp = fit_imputer(t, 5);
  EXPECT_TRUE(imp.reference == t);
  EXPECT_TRUE(impute(imp, t) == t);
}

TEST(KnnImputer, SingleObservationFallback) {
  const CohortTable t = table({continuous("a"), continuous("b")}, {{1, NAN}, {2, 7.5}, {3, NAN}}, {0, 1, 0});
  const KnnImputer imp = fit_imputer(t, 5);
  EXPECT_EQ(*imp.fallback_means[1], 7.5);
  // Query sharing no observed dimension with the reference takes the fallback.
  const CohortTable q = table({continuous("a"), continuous("b")}, {{NAN, NAN}}, {0});
  const CohortTable out = impute(imp, q);
  EXPECT_EQ(*out.at(0, 1), 7.5);
  EXPECT_DOUBLE_EQ(*out.at(0, 0), 2.0);
}

TEST(KnnImputer, ClampsToAvailableNeighbors) {
  const CohortTable t = table({continuous("a"), continuous("b")}, {{0, 4}, {1, NAN}, {3, 10}}, {0, 1, 0});
  const CohortTable out = impute(fit_imputer(t, 5), t);
  EXPECT_DOUBLE_EQ(*out.at(1, 1), 7.0);  // only two rows observe b
}

TEST(KnnImputer, MatchesBruteForceNeighbors) {
  const std::vector<std::vector<double>> rows{{0.0, 1.0, 5.0}, {0.4, 2.0, 3.0}, {2.0, 0.5, 1.0},
                                              {3.1, 1.5, 2.0}, {0.9, NAN, 4.0}, {5.0, 3.0, 0.5}};
  const CohortTable t = table({continuous("a"), continuous("b"), continuous("c")}, rows, {0, 1, 0, 1, 0, 1});
  const CohortTable out = impute(fit_imputer(t, 3), t);

  // Oracle: z-score with population sd of observed values, mean squared
  // distance over dimensions observed in both rows.
  auto pop_sd = [&](std::size_t c) {
    std::vector<double> v;
    for (const auto& r : rows)
      if (!std::isnan(r[c])) v.push_back(r[c]);
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / v.size());
  };
  const double sa = pop_sd(0), sc = pop_sd(2);
  std::vector<std::pair<double, double>> cand;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (r == 4) continue;
    const double da = (rows[4][0] - rows[r][0]) / sa, dc = (rows[4][2] - rows[r][2]) / sc;
    cand.push_back({(da * da + dc * dc) / 2.0, rows[r][1]});
  }
  std::sort(cand.begin(), cand.end());
  const double want = (cand[0].second + cand[1].second + cand[2].second) / 3.0;
  EXPECT_DOUBLE_EQ(*out.at(4, 1), want);
}

TEST(KnnImputer, PermutationInvariantAndParallelMatchesSerial) {
  CohortTable t = separable(120, 3);
  Rng rng = make_rng(5);
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c)
      if (uniform01(rng) < 0.15) t.at(r, c).reset();
  std::vector<std::size_t> perm(t.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  const CohortTable shuffled = t.subset(perm);
  const CohortTable query = separable(40, 8);
  CohortTable q = query;
  for (std::size_t r = 0; r < q.rows(); ++r) q.at(r, r % 3).reset();
  const CohortTable a = impute(fit_imputer(t, 5), q, Exec::serial);
  const CohortTable b = impute(fit_imputer(shuffled, 5), q, Exec::serial);
  const CohortTable c = impute(fit_imputer(t, 5), q, Exec::parallel);
  EXPECT_TRUE(a == b);
  EXPECT_TRUE(a == c);
}

TEST(KnnImputer, DiscreteColumnsStayDiscrete) {
  const CohortTable t = table({continuous("a"), binary("flag")},
                              {{0, 1}, {0.1, 1}, {0.2, 0}, {5, 0}, {0.05, NAN}}, {0, 1, 0, 1, 0});
  const CohortTable out = impute(fit_imputer(t, 3), t);
  EXPECT_EQ(*out.at(4, 1), 1.0);  // majority of the three nearest
}

TEST(TargetEncoder, Smoothing) {
  // Category 1: four rows with mean 0.5; category 0: six rows, all 0. Global mean 0.2.
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (int i = 0; i < 4; ++i) rows.push_back({1}), y.push_back(i < 2);
  for (int i = 0; i < 6; ++i) rows.push_back({0}), y.push_back(0);
  const CohortTable t = table({categorical("c", {"x", "y", "z"})}, rows, y);
  const TargetEncoder e = fit_encoder(t, "c", 10.0);
  EXPECT_DOUBLE_EQ(e.global_mean, 0.2);
  EXPECT_NEAR(e.encode_value(1), (4 * 0.5 + 10 * 0.2) / 14.0, 1e-15);
  EXPECT_NEAR(e.encode_value(1), 0.2857, 5e-5);
  EXPECT_EQ(e.encode_value(2), 0.2);  // unseen
  const TargetEncoder raw = fit_encoder(t, "c", 0.0);
  EXPECT_DOUBLE_EQ(raw.encode_value(1), 0.5);
  EXPECT_DOUBLE_EQ(raw.encode_value(0), 0.0);
  for (double a : {0.0, 1.0, 10.0, 100.0}) {
    const TargetEncoder enc = fit_encoder(t, "c", a);
    for (double c : {0.0, 1.0}) {
      const double mc = raw.encode_value(c);
      EXPECT_GE(enc.encode_value(c), std::min(mc, 0.2) - 1e-15);
      EXPECT_LE(enc.encode_value(c), std::max(mc, 0.2) + 1e-15);
    }
  }
}

TEST(TargetEncoder, EncodeIgnoresLabelsOfTransformedRows) {
  const CohortTable t = table({categorical("c", {"x", "y"})}, {{0}, {1}, {1}, {0}}, {0, 1, 1, 1});
  const TargetEncoder e = fit_encoder(t, "c", 2.0);
  CohortTable flipped = t;
  for (auto& l : flipped.labels()) l = 1 - l;
  const CohortTable a = encode(e, t), b = encode(e, flipped);
  for (std::size_t r = 0; r < t.rows(); ++r) EXPECT_EQ(*a.at(r, 0), *b.at(r, 0));
}

TEST(StandardScaler, PopulationSd) {
  const CohortTable t = table({continuous("x"), continuous("k")}, {{1, 4}, {2, 4}, {3, 4}}, {0, 1, 0});
  const CohortTable s = scale(fit_scaler(t), t);
  const double z = std::sqrt(1.5);  // 1 / sqrt(2/3)
  EXPECT_DOUBLE_EQ(*s.at(0, 0), -z);
  EXPECT_DOUBLE_EQ(*s.at(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(*s.at(2, 0), z);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(*s.at(r, 1), 0.0);
}

TEST(StandardScaler, TrainingFoldIsStandardized) {
  const CohortTable t = separable(500, 4);
  const CohortTable s = scale(fit_scaler(t), t);
  for (std::size_t c = 0; c < t.cols(); ++c) {
    double m = 0, v = 0;
    for (std::size_t r = 0; r < s.rows(); ++r) m += *s.at(r, c);
    m /= s.rows();
    for (std::size_t r = 0; r < s.rows(); ++r) v += (*s.at(r, c) - m) * (*s.at(r, c) - m);
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(std::sqrt(v / s.rows()), 1.0, 1e-12);
  }
}

TEST(ClassWeights, InverseFrequency) {
  const ClassWeights b = class_weights(std::vector<int>{0, 1, 0, 1});
  EXPECT_EQ(b.w0, 2.0);
  EXPECT_EQ(b.w1, 2.0);
  std::vector<int> y(1000, 0);
  std::fill(y.begin(), y.begin() + 196, 1);
  const ClassWeights w = class_weights(y);
  EXPECT_NEAR(w.w1, 5.102, 0.001);
  EXPECT_NEAR(w.w0, 1.244, 0.001);
  std::vector<int> t(10, 0);
  t[0] = 1;
  EXPECT_DOUBLE_EQ(class_weights(t).w1, 10.0);
  EXPECT_DOUBLE_EQ(class_weights(t).w0, 10.0 / 9.0);
  EXPECT_THROW(class_weights(std::vector<int>{0, 0}), DataError);
  EXPECT_EQ(w.per_sample(std::vector<int>{1, 0}), (std::vector<double>{w.w1, w.w0}));
}

TEST(ClassWeights, ProductWithFrequencyIsOne) {
  Rng rng = make_rng(77);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 5000);
    std::vector<int> y(n);
    for (auto& v : y) v = uniform01(rng) < 0.3;
    y[0] = 0;
    y[1] = 1;
    const double n1 = std::count(y.begin(), y.end(), 1);
    const ClassWeights w = class_weights(y);
    EXPECT_NEAR(w.w1 * (n1 / n), 1.0, 1e-12);
    EXPECT_NEAR(w.w0 * ((n - n1) / n), 1.0, 1e-12);
  }
}

namespace {

CohortTable mixed_table(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = uniform01(rng) < 0.25;
    y.push_back(label);
    rows.push_back({label + standard_normal(rng), uniform01(rng) < 0.3 + 0.4 * label ? 1.0 : 0.0,
                    static_cast<double>(uniform_index(rng, 3)), uniform01(rng) < 0.1 ? NAN : standard_normal(rng)});
  }
  return table({continuous("x"), binary("flag"), categorical("cat", {"a", "b", "c"}), continuous("z")}, rows, y);
}

}  // namespace

TEST(Pipeline, StagesAndBinaryPassthrough) {
  const CohortTable t = mixed_table(200, 2);
  const FittedPipeline p = fit_pipeline(t, PipelineConfig{});
  const CohortTable out = apply(p, t);
  EXPECT_EQ(out.missing_count(), 0u);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    const double f = *out.at(r, 1);
    EXPECT_TRUE(f == 0.0 || f == 1.0);
  }
  ASSERT_EQ(p.encoders.size(), 1u);
  EXPECT_EQ(p.encoders[0].feature, "cat");
  EXPECT_TRUE(passthrough_columns(p).empty());

  PipelineConfig raw;
  raw.passthrough_categorical = true;
  const FittedPipeline q = fit_pipeline(t, raw);
  EXPECT_TRUE(q.encoders.empty());
  EXPECT_EQ(passthrough_columns(q), (std::vector<std::size_t>{2}));
  const CohortTable qo = apply(q, t);
  for (std::size_t r = 0; r < qo.rows(); ++r) EXPECT_EQ(*qo.at(r, 2), std::round(*qo.at(r, 2)));
}

TEST(Pipeline, NoCategoricalMeansNoEncoder) {
  const FittedPipeline p = fit_pipeline(separable(100, 1), PipelineConfig{});
  EXPECT_TRUE(p.encoders.empty());
}

TEST(Pipeline, FrozenReplayIsIdempotent) {
  const CohortTable t = separable(300, 6);
  const FittedPipeline p = fit_pipeline(t, PipelineConfig{});
  const CohortTable once = apply(p, t);
  const StandardScaler again = fit_scaler(once);
  for (std::size_t c = 0; c < t.cols(); ++c) {
    EXPECT_NEAR(again.mean[c], 0.0, 1e-12);
    EXPECT_NEAR(again.sd[c], 1.0, 1e-12);
  }
}

TEST(Pipeline, HeldOutRowsNeverReachParameters) {
  const CohortTable all = mixed_table(300, 12);
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t r = 0; r < all.rows(); ++r) (r % 4 == 0 ? test_rows : train_rows).push_back(r);
  const CohortTable train = all.subset(train_rows);
  const std::string before = to_json(fit_pipeline(train, PipelineConfig{}, train_rows)).dump();

  CohortTable mutated = all;
  Rng rng = make_rng(3);
  for (auto r : test_rows) {
    mutated.labels()[r] = 1 - mutated.labels()[r];
    for (std::size_t c = 0; c < mutated.cols(); ++c) mutated.at(r, c) = uniform01(rng) < 0.5 ? Cell{} : Cell{1e6};
  }
  const std::string after = to_json(fit_pipeline(mutated.subset(train_rows), PipelineConfig{}, train_rows)).dump();
  EXPECT_EQ(before, after);

  // A held-out row with a missing value is imputed from training rows only.
  const FittedPipeline p = fit_pipeline(train, PipelineConfig{});
  EXPECT_EQ(p.imputer.reference.rows(), train.rows());
}

TEST(Pipeline, JsonRoundTripReplaysBitwise) {
  const CohortTable t = mixed_table(150, 21);
  const FittedPipeline p = fit_pipeline(t, PipelineConfig{});
  const FittedPipeline back = pipeline_from_json(to_json(p));
  EXPECT_EQ(to_json(back).dump(), to_json(p).dump());
  const CohortTable q = mixed_table(40, 22);
  EXPECT_TRUE(apply(p, q) == apply(back, q));
  EXPECT_TRUE(apply(p, q, Exec::serial) == apply(p, q, Exec::parallel));
}
