#pragma once

#include <functional>
#include <span>
#include <vector>

#include "icurisk/gbdt.hpp"
#include "icurisk/matrix.hpp"
#include "icurisk/parallel.hpp"

namespace icurisk {

/// Raw model output (margin) for every row of a batch.
using BatchModel = std::function<std::vector<double>(const Matrix&)>;

struct ShapMatrix {
  Matrix phi;               // rows x features
  double base_value = 0.0;  // mean output over the background
};

/// Largest feature count `shap_exhaustive` accepts.
inline constexpr std::size_t kMaxExhaustiveFeatures = 15;

/// Coalition value v(S) = mean over background rows z of f(x_S, z_rest);
/// attributions by the Shapley formula over all 2^d coalitions.
/// Throws ConfigError when d exceeds kMaxExhaustiveFeatures.
std::vector<double> shap_exhaustive(const BatchModel& model, std::span<const double> row,
                                    const Matrix& background);

/// Same value function for a boosted-tree margin, computed per (row,
/// background row, tree) in time linear in the tree size.
ShapMatrix shap_tree(const GbdtModel& model, const Matrix& rows, const Matrix& background,
                     Exec exec = Exec::parallel);

/// Seeded subsample of at most `cap` rows (all rows, in order, when fewer).
Matrix background_sample(const Matrix& x, std::size_t cap, std::uint64_t seed);

}  // namespace icurisk
