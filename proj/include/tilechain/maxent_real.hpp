#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tilechain/maxent_binary.hpp"
#include "tilechain/tile.hpp"

namespace tilechain {

/// Concave dual of the real-valued model over a set of free cells. Parameters
/// are laid out per tile as [lambda_m(0), lambda_v(0), lambda_m(1), ...].
/// Per cell, alpha = sum of lambda_m and beta = sum of lambda_v over the
/// covering tiles.
class RealDual {
 public:
  struct Constraint {
    std::vector<std::size_t> cells;  // indices into [0, n_cells)
    double sum = 0.0;
    double sum_sq = 0.0;
  };

  RealDual(std::vector<Constraint> constraints, std::size_t n_cells);

  // Every cell of every tile is free.
  static RealDual from_tiles(std::span<const RealTile> tiles, Index n_rows, Index n_cols);

  std::size_t parameter_count() const noexcept { return 2 * constraints_.size(); }
  std::size_t cell_count() const noexcept { return n_cells_; }
  const std::vector<Constraint>& constraints() const noexcept { return constraints_; }

  void cell_parameters(std::span<const double> lambda, std::span<double> alpha,
                       std::span<double> beta) const;

  /// L(lambda); nullopt when some beta <= 0 (infeasible point).
  std::optional<double> objective(std::span<const double> lambda) const;

  /// dL/dlambda into `out`; false when infeasible.
  bool gradient(std::span<const double> lambda, std::span<double> out) const;

  // Gradient from precomputed per-cell alpha/beta.
  void gradient_from_cells(std::span<const double> alpha, std::span<const double> beta,
                           std::span<double> out) const;

  // Negated diagonal of the Hessian (positive), for preconditioning.
  void negative_hessian_diagonal(std::span<const double> alpha, std::span<const double> beta,
                                 std::span<double> out) const;

 private:
  std::vector<Constraint> constraints_;
  std::size_t n_cells_;
};

struct RealInferenceOptions {
  double tolerance = 1e-6;  // gradient infinity-norm
  int max_iterations = 5000;
  std::uint64_t seed = 42;
  bool precondition = true;
};

/// Expected vs target statistics for one tile of a real model.
struct TileResidual {
  double expected_sum = 0.0;
  double expected_sum_sq = 0.0;
  double target_sum = 0.0;
  double target_sum_sq = 0.0;
};

/// Factorized Gaussian grid: cell (i, j) ~ N(-alpha/(2 beta), 1/(2 beta)).
/// Tiles whose targets force zero variance (point masses, such as an
/// all-zero row tile) hold their cells at a fixed value; those cells carry no
/// Gaussian parameters.
class RealModel {
 public:
  RealModel() = default;

  Index n_rows() const noexcept { return n_rows_; }
  Index n_cols() const noexcept { return n_cols_; }
  const std::vector<RealTile>& tiles() const noexcept { return tiles_; }
  const std::vector<double>& lambda_m() const noexcept { return lambda_m_; }
  const std::vector<double>& lambda_v() const noexcept { return lambda_v_; }

  double alpha(Index i, Index j) const { return alpha_[cell(i, j)]; }
  double beta(Index i, Index j) const { return beta_[cell(i, j)]; }
  bool pinned(Index i, Index j) const { return pinned_[cell(i, j)] != 0; }
  double pinned_value(Index i, Index j) const { return pinned_value_[cell(i, j)]; }

  // For pinned cells: the fixed value and zero variance.
  double mean(Index i, Index j) const;
  double variance(Index i, Index j) const;

  bool converged() const noexcept { return converged_; }
  int iterations() const noexcept { return iterations_; }
  double gradient_norm() const noexcept { return gradient_norm_; }

  std::vector<TileResidual> residuals() const;

  /// L(lambda) at the model's parameters over its free cells.
  double dual_objective() const;
  /// Gradient at the model's parameters, per input tile; pinned-out tiles
  /// report zeros.
  std::vector<double> dual_gradient() const;

 private:
  friend RealModel infer_real(std::vector<RealTile>, Index, Index, const RealInferenceOptions&,
                              const RealModel*);
  friend RealModel real_model_from_parameters(std::vector<RealTile>, Index, Index,
                                              std::vector<double>, std::vector<double>, bool, int,
                                              double);
  friend struct RealModelBuilder;

  std::size_t cell(Index i, Index j) const noexcept {
    return static_cast<std::size_t>(i) * n_cols_ + j;
  }

  Index n_rows_ = 0;
  Index n_cols_ = 0;
  std::vector<RealTile> tiles_;
  std::vector<double> lambda_m_;  // per tile; 0 for tiles with no free cells
  std::vector<double> lambda_v_;
  std::vector<double> alpha_;
  std::vector<double> beta_;
  std::vector<std::uint8_t> pinned_;
  std::vector<double> pinned_value_;
  // Dual over the free cells, with targets reduced by pinned contributions.
  std::vector<std::size_t> free_cells_;        // dual cell -> matrix cell
  std::vector<std::int64_t> active_tile_;      // input tile -> dual constraint, or -1
  std::optional<RealDual> dual_;
  bool converged_ = true;
  int iterations_ = 0;
  double gradient_norm_ = 0.0;
};

/// Conjugate-gradient ascent on the dual with an exact, feasibility-bounded
/// line search. Throws degenerate_target for a tile whose targets imply a
/// negative variance, inconsistent_tiles for point masses disagreeing on a
/// cell, and invalid_input when a cell is covered by no tile.
RealModel infer_real(std::vector<RealTile> tiles, Index n_rows, Index n_cols,
                     const RealInferenceOptions& options = {},
                     const RealModel* warm_start = nullptr);

/// Rebuilds a model from stored multipliers (one pair per tile).
RealModel real_model_from_parameters(std::vector<RealTile> tiles, Index n_rows, Index n_cols,
                                     std::vector<double> lambda_m, std::vector<double> lambda_v,
                                     bool converged, int iterations, double gradient_norm);

/// Gaussian log-density of `value` at cell (i, j). Pinned cells report
/// value 0 with `pinned` set when the value matches, `impossible` otherwise.
CellLogLik log_density_real(const RealModel& model, Index i, Index j, double value);

}  // namespace tilechain
