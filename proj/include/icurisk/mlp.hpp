#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "icurisk/matrix.hpp"

namespace icurisk {

struct MlpParams {
  int hidden = 16;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 200;
  int patience = 15;
  double dropout = 0.1;
  double validation_fraction = 0.1;
  /// Start W2 at zero so every initial prediction is sigmoid(b2).
  bool zero_output_init = false;

  bool operator==(const MlpParams&) const = default;
};

nlohmann::json to_json(const MlpParams& p);
MlpParams mlp_params_from_json(const nlohmann::json& j);

/// d -> h (ReLU) -> 1 (sigmoid). Parameters are stored flat in the order
/// W1 (h x d, row-major by hidden unit), b1 (h), W2 (h), b2 (1).
struct MlpModel {
  MlpParams params;
  std::size_t n_inputs = 0;
  std::vector<double> theta;
  std::vector<double> train_loss;  // per epoch, weighted BCE on the training part
  std::vector<double> val_loss;    // per epoch, on the validation part
  int best_epoch = -1;

  std::size_t n_params() const { return theta.size(); }
  double margin(std::span<const double> row) const;
};

std::size_t mlp_param_count(std::size_t d, std::size_t h);

/// Mean over `rows` of w_i * BCE_i and its gradient w.r.t. theta. `dropout_masks`,
/// if nonempty, holds one already-scaled keep multiplier per (row, hidden unit).
double mlp_loss_and_gradient(std::span<const double> theta, std::size_t d, std::size_t h,
                             const Matrix& x, std::span<const int> y, std::span<const double> w,
                             std::span<const std::size_t> rows, std::span<double> grad,
                             std::span<const double> dropout_masks = {});

MlpModel init_mlp(std::size_t d, const MlpParams& params, std::uint64_t seed);

/// Adam on weighted BCE with early stopping on a stratified validation split;
/// returns the parameters of the best validation epoch. A non-finite loss
/// aborts with ConfigError.
MlpModel train_mlp(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                   const MlpParams& params, std::uint64_t seed);

nlohmann::json to_json(const MlpModel& m);
MlpModel mlp_from_json(const nlohmann::json& j);

}  // namespace icurisk
