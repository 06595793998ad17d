#include "icurisk/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "icurisk/error.hpp"
#include "icurisk/numeric.hpp"
#include "icurisk/rng.hpp"

namespace icurisk {

nlohmann::json to_json(const MlpParams& p) {
  return {{"hidden", p.hidden},
          {"learning_rate", p.learning_rate},
          {"batch_size", p.batch_size},
          {"max_epochs", p.max_epochs},
          {"patience", p.patience},
          {"dropout", p.dropout},
          {"validation_fraction", p.validation_fraction},
          {"zero_output_init", p.zero_output_init}};
}

MlpParams mlp_params_from_json(const nlohmann::json& j) {
  MlpParams p;
  p.hidden = j.value("hidden", p.hidden);
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.batch_size = j.value("batch_size", p.batch_size);
  p.max_epochs = j.value("max_epochs", p.max_epochs);
  p.patience = j.value("patience", p.patience);
  p.dropout = j.value("dropout", p.dropout);
  p.validation_fraction = j.value("validation_fraction", p.validation_fraction);
  p.zero_output_init = j.value("zero_output_init", p.zero_output_init);
  return p;
}

std::size_t mlp_param_count(std::size_t d, std::size_t h) { return h * d + h + h + 1; }

namespace {

struct Layout {
  std::size_t d, h;
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return h * d; }
  std::size_t w2() const { return h * d + h; }
  std::size_t b2() const { return h * d + 2 * h; }
};

double forward(std::span<const double> theta, const Layout& L, std::span<const double> row,
               std::span<double> hidden, std::span<const double> mask) {
  double m = theta[L.b2()];
  for (std::size_t k = 0; k < L.h; ++k) {
    double a = theta[L.b1() + k];
    const double* w = theta.data() + L.w1() + k * L.d;
    for (std::size_t j = 0; j < L.d; ++j) a += w[j] * row[j];
    double z = a > 0.0 ? a : 0.0;
    if (!mask.empty()) z *= mask[k];
    hidden[k] = z;
    m += theta[L.w2() + k] * z;
  }
  return m;
}

}  // namespace

double MlpModel::margin(std::span<const double> row) const {
  const Layout L{n_inputs, static_cast<std::size_t>(params.hidden)};
  std::vector<double> hidden(L.h);
  return forward(theta, L, row, hidden, {});
}

double mlp_loss_and_gradient(std::span<const double> theta, std::size_t d, std::size_t h,
                             const Matrix& x, std::span<const int> y, std::span<const double> w,
                             std::span<const std::size_t> rows, std::span<double> grad,
                             std::span<const double> dropout_masks) {
  const Layout L{d, h};
  std::fill(grad.begin(), grad.end(), 0.0);
  if (rows.empty()) return 0.0;
  std::vector<double> hidden(h);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (std::size_t b = 0; b < rows.size(); ++b) {
    const std::size_t i = rows[b];
    auto row = x.row(i);
    std::span<const double> mask;
    if (!dropout_masks.empty()) mask = dropout_masks.subspan(b * h, h);
    const double m = forward(theta, L, row, hidden, mask);
    loss += w[i] * logistic_loss(m, y[i]);
    const double dm = w[i] * (sigmoid(m) - y[i]) * inv_n;
    grad[L.b2()] += dm;
    for (std::size_t k = 0; k < h; ++k) {
      grad[L.w2() + k] += dm * hidden[k];
      if (hidden[k] <= 0.0) continue;  // ReLU inactive or dropped
      const double da = dm * theta[L.w2() + k] * (mask.empty() ? 1.0 : mask[k]);
      grad[L.b1() + k] += da;
      double* gw = grad.data() + L.w1() + k * d;
      for (std::size_t j = 0; j < d; ++j) gw[j] += da * row[j];
    }
  }
  return loss * inv_n;
}

MlpModel init_mlp(std::size_t d, const MlpParams& params, std::uint64_t seed) {
  if (params.hidden < 1) throw ConfigError("MLP needs at least one hidden unit");
  const Layout L{d, static_cast<std::size_t>(params.hidden)};
  MlpModel m;
  m.params = params;
  m.n_inputs = d;
  m.theta.assign(mlp_param_count(d, L.h), 0.0);
  Rng rng = make_rng(seed, 0);
  const double s1 = std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(d, 1)));
  for (std::size_t k = 0; k < L.h * d; ++k) m.theta[L.w1() + k] = s1 * standard_normal(rng);
  if (!params.zero_output_init) {
    const double s2 = std::sqrt(1.0 / static_cast<double>(L.h));
    for (std::size_t k = 0; k < L.h; ++k) m.theta[L.w2() + k] = s2 * standard_normal(rng);
  }
  return m;
}

MlpModel train_mlp(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                   const MlpParams& params, std::uint64_t seed) {
  const std::size_t n = x.rows(), d = x.cols();
  if (y.size() != n || weights.size() != n) throw ConfigError("labels/weights length mismatch");
  if (!(params.learning_rate > 0.0) || params.batch_size < 1 || params.max_epochs < 1)
    throw ConfigError("invalid MLP training parameters");
  if (params.dropout < 0.0 || params.dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
  if (params.validation_fraction < 0.0 || params.validation_fraction >= 1.0)
    throw ConfigError("validation_fraction must be in [0,1)");

  MlpModel model = init_mlp(d, params, seed);
  const std::size_t h = static_cast<std::size_t>(params.hidden);

  // Stratified validation split.
  std::vector<std::size_t> train_rows, val_rows;
  {
    Rng rng = make_rng(seed, 1);
    for (int c = 0; c < 2; ++c) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < n; ++i)
        if ((y[i] == 1) == (c == 1)) idx.push_back(i);
      for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
      std::size_t n_val = static_cast<std::size_t>(
          std::floor(params.validation_fraction * static_cast<double>(idx.size()) + 0.5));
      if (n_val >= idx.size()) n_val = 0;
      val_rows.insert(val_rows.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
      train_rows.insert(train_rows.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
  }
  if (train_rows.empty()) throw DataError("MLP has no training rows");

  const std::size_t P = model.theta.size();
  std::vector<double> grad(P), mom(P, 0.0), vel(P, 0.0), scratch(P);
  std::vector<double> best = model.theta;
  double best_val = std::numeric_limits<double>::infinity();
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;
  int since_best = 0;
  Rng rng = make_rng(seed, 2);
  const double keep = 1.0 - params.dropout;
  std::vector<double> masks;

  for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
    std::vector<std::size_t> order = train_rows;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(params.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(params.batch_size));
      std::span<const std::size_t> batch(order.data() + start, end - start);
      masks.clear();
      if (params.dropout > 0.0) {
        masks.resize(batch.size() * h);
        for (auto& mk : masks) mk = uniform01(rng) < keep ? 1.0 / keep : 0.0;
      }
      const double loss = mlp_loss_and_gradient(model.theta, d, h, x, y, weights, batch, grad, masks);
      if (!std::isfinite(loss)) throw ConfigError("MLP training diverged (non-finite loss)");
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t p = 0; p < P; ++p) {
        mom[p] = beta1 * mom[p] + (1.0 - beta1) * grad[p];
        vel[p] = beta2 * vel[p] + (1.0 - beta2) * grad[p] * grad[p];
        model.theta[p] -= params.learning_rate * (mom[p] / c1) / (std::sqrt(vel[p] / c2) + eps);
      }
    }
    const double tl = mlp_loss_and_gradient(model.theta, d, h, x, y, weights, train_rows, scratch);
    const double vl = val_rows.empty()
                          ? tl
                          : mlp_loss_and_gradient(model.theta, d, h, x, y, weights, val_rows, scratch);
    if (!std::isfinite(tl) || !std::isfinite(vl)) throw ConfigError("MLP training diverged (non-finite loss)");
    model.train_loss.push_back(tl);
    model.val_loss.push_back(vl);
    if (vl < best_val - 1e-12) {
      best_val = vl;
      best = model.theta;
      model.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= params.patience) {
      break;
    }
  }
  model.theta = std::move(best);
  return model;
}

nlohmann::json to_json(const MlpModel& m) {
  return {{"params", to_json(m.params)}, {"n_inputs", m.n_inputs},   {"theta", m.theta},
          {"train_loss", m.train_loss},  {"val_loss", m.val_loss},   {"best_epoch", m.best_epoch}};
}

MlpModel mlp_from_json(const nlohmann::json& j) {
  MlpModel m;
  m.params = mlp_params_from_json(j.at("params"));
  m.n_inputs = j.at("n_inputs").get<std::size_t>();
  m.theta = j.at("theta").get<std::vector<double>>();
  m.train_loss = j.value("train_loss", std::vector<double>{});
  m.val_loss = j.value("val_loss", std::vector<double>{});
  m.best_epoch = j.value("best_epoch", -1);
  if (m.theta.size() != mlp_param_count(m.n_inputs, static_cast<std::size_t>(m.params.hidden)))
    throw DataError("MLP parameter vector has the wrong length");
  return m;
}

}  // namespace icurisk
