#include <gtest/gtest.h>

#include <numeric>

#include "fixtures.hpp"
#include "icurisk/error.hpp"
#include "icurisk/gbdt.hpp"
#include "icurisk/linear.hpp"
#include "icurisk/metrics.hpp"
#include "icurisk/mlp.hpp"
#include "icurisk/models.hpp"
#include "icurisk/naive_bayes.hpp"
#include "icurisk/preprocess.hpp"

using namespace icurisk;
using namespace icurisk::testing;

namespace {

std::vector<double> ones(std::size_t n) { return std::vector<double>(n, 1.0); }

void logistic_data(std::size_t n, const std::vector<double>& beta, double bias, std::uint64_t seed, Matrix& x,
                   std::vector<int>& y) {
  Rng rng = make_rng(seed);
  x = Matrix(n, beta.size());
  y.assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    double m = bias;
    for (std::size_t c = 0; c < beta.size(); ++c) {
      x(r, c) = standard_normal(rng);
      m += beta[c] * x(r, c);
    }
    y[r] = uniform01(rng) < sigmoid(m);
  }
}

}  // namespace

TEST(Gbdt, PureClassSaturates) {
  Matrix x(20, 2);
  for (std::size_t r = 0; r < 20; ++r) x(r, 0) = r, x(r, 1) = r % 3;
  const std::vector<int> y(20, 1);
  const GbdtModel m = train_gbdt(x, y, ones(20), GbdtParams{}, 1);
  for (std::size_t r = 0; r < 20; ++r) EXPECT_GE(sigmoid(m.margin(x.row(r))), 0.99);
}

TEST(Gbdt, StumpTakesMaxGainSplit) {
  const std::vector<double> xs{1, 2, 3, 4}, w{1, 2, 1, 3};
  const std::vector<int> y{1, 0, 1, 1};
  Matrix x(4, 1, std::vector<double>(xs));
  GbdtParams p;
  p.n_trees = 1;
  p.max_depth = 1;
  p.min_child_weight = 0.0;
  p.l2_leaf = 1.0;
  const GbdtModel m = train_gbdt(x, y, w, p, 1);

  const double prob = sigmoid(m.base_score);
  std::vector<double> g(4), h(4);
  for (int i = 0; i < 4; ++i) g[i] = w[i] * (prob - y[i]), h[i] = w[i] * prob * (1 - prob);
  const double G = g[0] + g[1] + g[2] + g[3], H = h[0] + h[1] + h[2] + h[3];
  int best = -1;
  double best_gain = 0;
  for (int cut = 1; cut < 4; ++cut) {
    double gl = 0, hl = 0;
    for (int i = 0; i < cut; ++i) gl += g[i], hl += h[i];
    const double gain = gl * gl / (hl + 1) + (G - gl) * (G - gl) / (H - hl + 1) - G * G / (H + 1);
    if (gain > best_gain) best_gain = gain, best = cut;
  }
  ASSERT_EQ(m.trees.size(), 1u);
  const TreeNode& root = m.trees[0].nodes[0];
  ASSERT_FALSE(root.is_leaf());
  EXPECT_GE(root.threshold, xs[best - 1]);
  EXPECT_LT(root.threshold, xs[best]);
}

TEST(Gbdt, IntegerWeightsEqualDuplicatedRows) {
  Matrix x;
  std::vector<int> y;
  logistic_data(60, {1.0, -0.5}, 0.0, 4, x, y);
  std::vector<double> w(60);
  Rng rng = make_rng(9);
  for (auto& v : w) v = 1.0 + static_cast<double>(uniform_index(rng, 3));
  std::vector<std::size_t> idx;
  for (std::size_t r = 0; r < 60; ++r)
    for (int k = 0; k < static_cast<int>(w[r]); ++k) idx.push_back(r);
  const Matrix xd = x.select_rows(idx);
  std::vector<int> yd;
  for (auto r : idx) yd.push_back(y[r]);
  GbdtParams p;
  p.n_trees = 1;
  const GbdtModel a = train_gbdt(x, y, w, p, 1);
  const GbdtModel b = train_gbdt(xd, yd, ones(idx.size()), p, 1);
  ASSERT_EQ(a.trees[0].nodes.size(), b.trees[0].nodes.size());
  for (std::size_t i = 0; i < a.trees[0].nodes.size(); ++i) {
    const auto &na = a.trees[0].nodes[i], &nb = b.trees[0].nodes[i];
    EXPECT_EQ(na.feature, nb.feature);
    EXPECT_EQ(na.threshold, nb.threshold);
    EXPECT_NEAR(na.value, nb.value, 1e-12);
  }
}

TEST(Gbdt, LearnsAndRoundTrips) {
  Matrix x;
  std::vector<int> y;
  logistic_data(800, {2.0, -1.0, 0.0}, -1.0, 5, x, y);
  GbdtParams p;
  p.subsample = 0.8;
  const GbdtModel m = train_gbdt(x, y, ones(800), p, 3);
  std::vector<double> s(800);
  for (std::size_t r = 0; r < 800; ++r) s[r] = m.margin(x.row(r));
  EXPECT_GT(auroc(s, y), 0.85);
  EXPECT_TRUE(std::is_sorted(m.train_loss.rbegin(), m.train_loss.rend()) || m.train_loss.size() > 1);
  const GbdtModel back = gbdt_from_json(to_json(m));
  for (std::size_t r = 0; r < 800; ++r) EXPECT_EQ(back.margin(x.row(r)), s[r]);
  const GbdtModel again = train_gbdt(x, y, ones(800), p, 3);
  EXPECT_EQ(to_json(again).dump(), to_json(m).dump());
}

TEST(Gbdt, OrderedCategoryEncoding) {
  Rng rng = make_rng(3);
  Matrix x(400, 2);
  std::vector<int> y(400);
  for (std::size_t r = 0; r < 400; ++r) {
    x(r, 0) = static_cast<double>(uniform_index(rng, 4));
    x(r, 1) = standard_normal(rng);
    y[r] = uniform01(rng) < (x(r, 0) == 3 ? 0.8 : 0.1);
  }
  GbdtParams p;
  p.ordered_mode = true;
  const std::vector<std::size_t> cats{0};
  const GbdtModel m = train_gbdt(x, y, ones(400), p, 1, cats);
  ASSERT_EQ(m.categorical.size(), 1u);
  EXPECT_GT(m.categorical[0].encode(3), m.categorical[0].encode(0));
  EXPECT_NEAR(m.categorical[0].encode(99), m.categorical[0].prior, 1e-12);
  std::vector<double> s(400);
  for (std::size_t r = 0; r < 400; ++r) s[r] = m.margin(x.row(r));
  EXPECT_GT(auroc(s, y), 0.8);
}

TEST(Logreg, RecoversCoefficients) {
  const std::vector<double> beta{1.0, -0.7, 0.4};
  Matrix x;
  std::vector<int> y;
  logistic_data(5000, beta, -0.3, 17, x, y);
  LogregParams p;
  p.C = 1e4;
  const LinearModel m = train_logreg(x, y, ones(5000), p);
  EXPECT_TRUE(m.converged);
  for (std::size_t j = 0; j < beta.size(); ++j) EXPECT_NEAR(m.weights[j], beta[j], 0.1 * std::abs(beta[j]));
}

TEST(Logreg, SatisfiesStationarity) {
  Matrix x;
  std::vector<int> y;
  logistic_data(500, {0.8, -0.4}, 0.2, 2, x, y);
  LogregParams p;
  p.C = 0.5;
  p.tol = 1e-10;
  p.max_iter = 500;
  const LinearModel m = train_logreg(x, y, ones(500), p);
  // Gradient of C * sum(loss) + 0.5 |beta|^2 vanishes at the optimum.
  double gb = 0;
  std::vector<double> g(2, 0.0);
  for (std::size_t r = 0; r < 500; ++r) {
    const double e = sigmoid(m.margin(x.row(r))) - y[r];
    gb += p.C * e;
    for (int j = 0; j < 2; ++j) g[j] += p.C * e * x(r, j);
  }
  EXPECT_NEAR(gb, 0.0, 1e-6);
  for (int j = 0; j < 2; ++j) EXPECT_NEAR(g[j] + m.weights[j], 0.0, 1e-6);
}

TEST(Logreg, TinyL1ZeroesWeights) {
  Matrix x;
  std::vector<int> y;
  logistic_data(300, {1.0, 1.0}, 0.0, 8, x, y);
  std::vector<double> w(300);
  for (std::size_t r = 0; r < 300; ++r) w[r] = y[r] ? 2.0 : 0.5;
  LogregParams p;
  p.penalty = Penalty::l1;
  p.C = 1e-6;
  const LinearModel m = train_logreg(x, y, w, p);
  for (double b : m.weights) EXPECT_EQ(b, 0.0);
  double wp = 0, wn = 0;
  for (std::size_t r = 0; r < 300; ++r) (y[r] ? wp : wn) += w[r];
  EXPECT_NEAR(m.bias, std::log(wp / wn), 1e-8);
}

TEST(Logreg, SeparablePointsWithStrongL2) {
  Matrix x(2, 1, std::vector<double>{-1.0, 1.0});
  const std::vector<int> y{0, 1};
  LogregParams p;
  p.C = 0.1;
  const LinearModel m = train_logreg(x, y, ones(2), p);
  EXPECT_GT(m.weights[0], 0.0);
  // |beta| <= C * sum |x| bounds the stationary point.
  EXPECT_LE(std::abs(m.weights[0]), p.C * 2.0);
}

TEST(NaiveBayes, SymmetricClasses) {
  Matrix x(4, 1, std::vector<double>{-2, -1, 1, 2});
  const std::vector<int> y{0, 0, 1, 1};
  const GaussianNbModel m = train_gnb(x, y, ones(4));
  const std::vector<double> zero{0.0};
  EXPECT_NEAR(m.posterior(zero)[1], 0.5, 1e-15);
}

TEST(NaiveBayes, MatchesBayesRule) {
  Matrix x(6, 2, std::vector<double>{0.0, 1.0, 1.0, 2.0, 2.0, 2.5, 3.0, 0.5, 4.0, 1.5, 5.5, 0.0});
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  GnbParams params;
  params.var_smoothing = 0.0;
  const GaussianNbModel m = train_gnb(x, y, ones(6), params);
  auto density = [](double v, double mu, double var) {
    return std::exp(-(v - mu) * (v - mu) / (2 * var)) / std::sqrt(2 * M_PI * var);
  };
  double mu[2][2], var[2][2];
  for (int c = 0; c < 2; ++c)
    for (int j = 0; j < 2; ++j) {
      double s = 0, ss = 0;
      for (int r = 3 * c; r < 3 * c + 3; ++r) s += x(r, j);
      mu[c][j] = s / 3;
      for (int r = 3 * c; r < 3 * c + 3; ++r) ss += (x(r, j) - mu[c][j]) * (x(r, j) - mu[c][j]);
      var[c][j] = ss / 3;
    }
  const std::vector<double> q{2.5, 1.2};
  double joint[2];
  for (int c = 0; c < 2; ++c) joint[c] = 0.5 * density(q[0], mu[c][0], var[c][0]) * density(q[1], mu[c][1], var[c][1]);
  EXPECT_NEAR(m.posterior(q)[1], joint[1] / (joint[0] + joint[1]), 1e-12);
}

TEST(NaiveBayes, ConstantFeatureIsFloored) {
  Matrix x(4, 2, std::vector<double>{1, 0, 1, 1, 1, 2, 1, 3});
  const std::vector<int> y{0, 0, 1, 1};
  const GaussianNbModel m = train_gnb(x, y, ones(4));
  const std::vector<double> q{1.0, 1.5};
  EXPECT_TRUE(std::isfinite(m.margin(q)));
  EXPECT_GT(m.var[0][0], 0.0);
  EXPECT_THROW(train_gnb(x, std::vector<int>{0, 0, 0, 0}, ones(4)), DataError);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  const std::size_t d = 4, h = 6;
  Matrix x;
  std::vector<int> y;
  logistic_data(5, {1, -1, 0.5, 0.2}, 0.0, 3, x, y);
  MlpParams p;
  p.hidden = static_cast<int>(h);
  std::vector<double> theta = init_mlp(d, p, 2).theta;
  Rng rng = make_rng(6);
  for (auto& t : theta) t += 0.2 * standard_normal(rng);
  const std::vector<double> w{1.0, 2.0, 0.5, 1.5, 1.0};
  std::vector<std::size_t> rows(5);
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<double> grad(theta.size()), tmp(theta.size());
  mlp_loss_and_gradient(theta, d, h, x, y, w, rows, grad);
  double worst = 0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto tp = theta, tm = theta;
    tp[i] += 1e-5;
    tm[i] -= 1e-5;
    const double fd = (mlp_loss_and_gradient(tp, d, h, x, y, w, rows, tmp) -
                       mlp_loss_and_gradient(tm, d, h, x, y, w, rows, tmp)) / 2e-5;
    worst = std::max(worst, std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-8}));
  }
  EXPECT_LT(worst, 1e-4);
  EXPECT_EQ(theta.size(), mlp_param_count(d, h));
}

TEST(Mlp, ZeroOutputInitPredictsOutputBias) {
  MlpParams p;
  p.zero_output_init = true;
  const MlpModel m = init_mlp(3, p, 1);
  Matrix x;
  std::vector<int> y;
  logistic_data(10, {1, 1, 1}, 0.0, 1, x, y);
  const double b2 = m.theta.back();
  for (std::size_t r = 0; r < 10; ++r) EXPECT_DOUBLE_EQ(sigmoid(m.margin(x.row(r))), sigmoid(b2));
}

TEST(Mlp, SeededTrainingIsReproducible) {
  Matrix x;
  std::vector<int> y;
  logistic_data(300, {1.5, -1.0}, -0.5, 12, x, y);
  MlpParams p;
  p.max_epochs = 30;
  const MlpModel a = train_mlp(x, y, ones(300), p, 5), b = train_mlp(x, y, ones(300), p, 5);
  EXPECT_EQ(a.train_loss, b.train_loss);
  EXPECT_EQ(a.val_loss, b.val_loss);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_GE(a.best_epoch, 0);
}

TEST(Mlp, DivergenceIsReported) {
  Matrix x;
  std::vector<int> y;
  logistic_data(200, {1.0}, 0.0, 1, x, y);
  for (std::size_t r = 0; r < 200; ++r) x(r, 0) *= 1e305;
  MlpParams p;
  p.learning_rate = 1e10;
  p.max_epochs = 5;
  EXPECT_THROW(train_mlp(x, y, ones(200), p, 1), ConfigError);
}

TEST(Models, FacadeDispatchAndRoundTrip) {
  Matrix x;
  std::vector<int> y;
  logistic_data(400, {1.2, -0.8}, -0.5, 30, x, y);
  const auto w = class_weights(y).per_sample(y);
  for (const auto& entry : default_model_entries()) {
    const ModelSpec& spec = entry.grid.front();
    const TrainedModel m = train(spec, x, y, w, 4);
    const auto p = predict_proba(m, x);
    for (double v : p) {
      EXPECT_GE(v, 1e-7);
      EXPECT_LE(v, 1 - 1e-7);
    }
    EXPECT_GT(auroc(p, y), 0.75) << entry.name;
    const TrainedModel back = trained_model_from_json(to_json(m));
    EXPECT_EQ(predict_proba(back, x), p) << entry.name;
    EXPECT_THROW(predict_proba(m, Matrix(2, 3)), SchemaError);
  }
}

TEST(Models, DefaultEntriesOrder) {
  std::vector<std::string> names;
  for (const auto& e : default_model_entries()) names.push_back(e.name);
  EXPECT_EQ(names, (std::vector<std::string>{"gbdt_ordered", "gbdt_subsample", "gbdt_exact", "logistic_regression",
                                             "naive_bayes", "neural_network"}));
}
