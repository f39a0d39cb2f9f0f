#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tilechain/tile.hpp"

namespace tilechain {

/// Log-likelihood of one observed cell value. `impossible` marks an
/// observation the model gives zero probability (value is -inf then);
/// `pinned` marks a cell the model holds at a fixed value.
struct CellLogLik {
  double value = 0.0;
  bool impossible = false;
  bool pinned = false;
};

struct BinaryInferenceOptions {
  double tolerance = 1e-6;  // max |fr(T;p) - gamma_T| over noisy tiles
  int max_sweeps = 1000;
  // Optional permutation of tile indices; default sweeps in input order.
  std::vector<std::size_t> sweep_order;
};

/// Factorized Bernoulli grid. Cells not constrained by any tile stay at 1/2;
/// cells forced to 0 or 1 by exact tiles (or by propagation through
/// partially pinned tiles) are frozen.
class BinaryModel {
 public:
  BinaryModel() = default;
  BinaryModel(Index n_rows, Index n_cols);

  Index n_rows() const noexcept { return n_rows_; }
  Index n_cols() const noexcept { return n_cols_; }

  double probability(Index i, Index j) const { return prob_[cell(i, j)]; }
  bool pinned(Index i, Index j) const { return pinned_by_[cell(i, j)] >= 0; }
  std::span<const double> probabilities() const noexcept { return prob_; }
  const std::vector<BinaryTile>& tiles() const noexcept { return tiles_; }

  bool converged() const noexcept { return converged_; }
  int sweeps() const noexcept { return sweeps_; }
  double max_residual() const noexcept { return max_residual_; }

 private:
  friend BinaryModel infer_binary(std::vector<BinaryTile>, Index, Index,
                                  const BinaryInferenceOptions&, const BinaryModel*);
  friend BinaryModel binary_model_from_parameters(std::vector<BinaryTile>, Index, Index,
                                                  std::vector<double>, std::vector<std::int32_t>,
                                                  bool, int, double);

  std::size_t cell(Index i, Index j) const noexcept {
    return static_cast<std::size_t>(i) * n_cols_ + j;
  }

  Index n_rows_ = 0;
  Index n_cols_ = 0;
  std::vector<double> prob_;
  std::vector<std::int32_t> pinned_by_;  // tile index, or -1 when free
  std::vector<BinaryTile> tiles_;
  bool converged_ = true;
  int sweeps_ = 0;
  double max_residual_ = 0.0;
};

/// Iterative scaling over the tile set. Exact tiles are applied first and
/// frozen; noisy tiles are then rescaled in turn until every tile's expected
/// frequency is within `tolerance` of its target or the sweep cap is hit.
/// `warm_start` seeds the free cells with a previous model's probabilities,
/// which must come from a subset of these tiles.
///
/// Throws inconsistent_tiles when two tiles pin a cell to different values
/// or a noisy tile cannot reach its target around pinned cells.
BinaryModel infer_binary(std::vector<BinaryTile> tiles, Index n_rows, Index n_cols,
                         const BinaryInferenceOptions& options = {},
                         const BinaryModel* warm_start = nullptr);

// Rebuilds a model from a snapshot without re-running inference.
BinaryModel binary_model_from_parameters(std::vector<BinaryTile> tiles, Index n_rows, Index n_cols,
                                         std::vector<double> probabilities,
                                         std::vector<std::int32_t> pinned_by, bool converged,
                                         int sweeps, double max_residual);

/// fr(T; p): mean cell probability over the tile.
double expected_frequency(const Tile& tile, const BinaryModel& model);

/// Scalar x > 0 for which sum_k x p_k / (1 - (1 - x) p_k) equals
/// `target_sum` over the given free-cell probabilities. Requires
/// 0 < target_sum < (number of cells with 0 < p < 1) + (cells with p = 1).
double solve_scaling_factor(std::span<const double> probs, double target_sum);

/// Same solve for a whole tile against a model: pinned cells keep their
/// values and the target is met on the free ones.
double solve_scaling_factor(const Tile& tile, const BinaryModel& model, double gamma);

/// Applies the Möbius update p <- x p / (1 - (1 - x) p).
inline double scale_probability(double p, double x) { return x * p / (1.0 - (1.0 - x) * p); }

CellLogLik log_prob_binary(const BinaryModel& model, Index i, Index j, int value);

}  // namespace tilechain
