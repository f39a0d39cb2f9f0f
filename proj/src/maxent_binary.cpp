#include "tilechain/maxent_binary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "tilechain/error.hpp"

namespace tilechain {

BinaryModel::BinaryModel(Index n_rows, Index n_cols)
    : n_rows_(n_rows),
      n_cols_(n_cols),
      prob_(static_cast<std::size_t>(n_rows) * n_cols, 0.5),
      pinned_by_(prob_.size(), -1) {}

double solve_scaling_factor(std::span<const double> probs, double target_sum) {
  double fixed = 0.0;
  std::size_t movable = 0;
  for (double p : probs) {
    if (p >= 1.0) fixed += 1.0;
    else if (p > 0.0) ++movable;
  }
  if (movable == 0 || !(target_sum > fixed) || !(target_sum < fixed + static_cast<double>(movable))) {
    std::ostringstream msg;
    msg << "no scaling factor reaches expected count " << target_sum << " (" << fixed
        << " cells fixed at 1, " << movable << " adjustable)";
    throw Error(ErrorCategory::inconsistent_tiles, msg.str());
  }

  // Newton on u = log x; h(u) is increasing with h'(u) = sum q (1 - q).
  constexpr double inf = std::numeric_limits<double>::infinity();
  double u = 0.0, lo = -inf, hi = inf;
  const double h_tol = 1e-13 * std::max(1.0, target_sum);
  for (int iter = 0; iter < 200; ++iter) {
    const double x = std::exp(u);
    double h = -target_sum, dh = 0.0;
    for (double p : probs) {
      const double q = x * p / (1.0 - p + x * p);
      h += q;
      dh += q * (1.0 - q);
    }
    if (h > 0.0) hi = u;
    else lo = u;
    if (std::abs(h) <= h_tol) break;

    double next = u - h / dh;
    if (!(dh > 0.0) || !(next > lo && next < hi)) {
      if (std::isfinite(lo) && std::isfinite(hi)) next = 0.5 * (lo + hi);
      else if (h > 0.0) next = u - std::max(1.0, std::abs(u));
      else next = u + std::max(1.0, std::abs(u));
    }
    const bool done = std::abs(next - u) <= 1e-12 * std::max(1.0, std::abs(u));
    u = next;
    if (done) break;
  }
  return std::exp(u);
}

double expected_frequency(const Tile& tile, const BinaryModel& model) {
  if (tile.cell_count() == 0) return 0.0;
  double sum = 0.0;
  for (Index i : tile.rows) {
    for (Index j : tile.cols) sum += model.probability(i, j);
  }
  return sum / static_cast<double>(tile.cell_count());
}

double solve_scaling_factor(const Tile& tile, const BinaryModel& model, double gamma) {
  std::vector<double> probs;
  probs.reserve(tile.cell_count());
  double pinned_ones = 0.0;
  for (Index i : tile.rows) {
    for (Index j : tile.cols) {
      if (model.pinned(i, j)) pinned_ones += model.probability(i, j);
      else probs.push_back(model.probability(i, j));
    }
  }
  return solve_scaling_factor(probs, gamma * static_cast<double>(tile.cell_count()) - pinned_ones);
}

CellLogLik log_prob_binary(const BinaryModel& model, Index i, Index j, int value) {
  if (i >= model.n_rows() || j >= model.n_cols()) {
    throw Error(ErrorCategory::invalid_input, "cell out of bounds");
  }
  const double p = model.probability(i, j);
  const double mass = value != 0 ? p : 1.0 - p;
  CellLogLik out;
  out.pinned = model.pinned(i, j);
  if (mass <= 0.0) {
    out.value = -std::numeric_limits<double>::infinity();
    out.impossible = true;
  } else {
    out.value = std::log(mass);
  }
  return out;
}

namespace {

std::string cell_name(Index i, Index j) {
  return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

struct NoisyTile {
  std::size_t tile;
  std::vector<std::size_t> free_cells;
  double target_free = 0.0;  // expected count required on the free cells
  bool active = true;
};

}  // namespace

BinaryModel infer_binary(std::vector<BinaryTile> tiles, Index n_rows, Index n_cols,
                         const BinaryInferenceOptions& options, const BinaryModel* warm_start) {
  BinaryModel model(n_rows, n_cols);
  for (auto& t : tiles) {
    t.tile.canonicalize();
    check_tile_bounds(t.tile, n_rows, n_cols, t.name);
    if (!(t.gamma >= 0.0 && t.gamma <= 1.0)) {
      throw Error(ErrorCategory::invalid_input, "tile '" + t.name + "' has target outside [0,1]");
    }
  }
  model.tiles_ = std::move(tiles);
  const auto& ts = model.tiles_;
  auto& prob = model.prob_;
  auto& pinned_by = model.pinned_by_;

  auto pin = [&](std::size_t c, double value, std::size_t tile) {
    if (pinned_by[c] >= 0 && prob[c] != value) {
      const auto i = static_cast<Index>(c / n_cols), j = static_cast<Index>(c % n_cols);
      throw Error(ErrorCategory::inconsistent_tiles,
                  "tiles '" + ts[pinned_by[c]].name + "' and '" + ts[tile].name +
                      "' pin cell " + cell_name(i, j) + " to different values");
    }
    if (pinned_by[c] < 0) pinned_by[c] = static_cast<std::int32_t>(tile);
    prob[c] = value;
  };

  for (std::size_t t = 0; t < ts.size(); ++t) {
    if (!ts[t].exact()) continue;
    for (Index i : ts[t].tile.rows) {
      for (Index j : ts[t].tile.cols) pin(model.cell(i, j), ts[t].gamma, t);
    }
  }

  std::vector<NoisyTile> noisy;
  for (std::size_t t = 0; t < ts.size(); ++t) {
    if (ts[t].exact()) continue;
    NoisyTile nt{t, {}, ts[t].gamma * static_cast<double>(ts[t].tile.cell_count())};
    nt.free_cells.reserve(ts[t].tile.cell_count());
    for (Index i : ts[t].tile.rows) {
      for (Index j : ts[t].tile.cols) nt.free_cells.push_back(model.cell(i, j));
    }
    noisy.push_back(std::move(nt));
  }

  // Drop pinned cells from each noisy tile; a tile whose remaining target is
  // all-zero or all-one over its free cells pins those too. Repeat to a
  // fixed point.
  for (bool changed = true; changed;) {
    changed = false;
    for (auto& nt : noisy) {
      if (!nt.active) continue;
      std::int32_t blocker = -1;
      auto kept = std::remove_if(nt.free_cells.begin(), nt.free_cells.end(), [&](std::size_t c) {
        if (pinned_by[c] < 0) return false;
        nt.target_free -= prob[c];
        blocker = pinned_by[c];
        return true;
      });
      nt.free_cells.erase(kept, nt.free_cells.end());

      const double n_free = static_cast<double>(nt.free_cells.size());
      const double slack = 1e-9 * static_cast<double>(ts[nt.tile].tile.cell_count());
      auto fail = [&] {
        std::ostringstream msg;
        msg << "tile '" << ts[nt.tile].name << "' cannot reach frequency " << ts[nt.tile].gamma;
        if (blocker >= 0) msg << " given cells pinned by tile '" << ts[blocker].name << "'";
        throw Error(ErrorCategory::inconsistent_tiles, msg.str());
      };
      if (nt.target_free < -slack || nt.target_free > n_free + slack) fail();
      if (nt.free_cells.empty()) {
        nt.active = false;
        continue;
      }
      if (nt.target_free <= slack || nt.target_free >= n_free - slack) {
        const double value = nt.target_free <= slack ? 0.0 : 1.0;
        for (std::size_t c : nt.free_cells) pin(c, value, nt.tile);
        nt.free_cells.clear();
        nt.active = false;
        changed = true;
      }
    }
  }

  if (warm_start != nullptr && warm_start->n_rows() == n_rows && warm_start->n_cols() == n_cols) {
    const auto previous = warm_start->probabilities();
    for (std::size_t c = 0; c < prob.size(); ++c) {
      if (pinned_by[c] >= 0) continue;
      const double p = previous[c];
      prob[c] = (p > 0.0 && p < 1.0) ? p : 0.5;
    }
  }

  std::vector<std::size_t> order(noisy.size());
  std::iota(order.begin(), order.end(), 0);
  if (!options.sweep_order.empty()) {
    // The option permutes original tile indices; map onto the noisy list.
    std::vector<std::size_t> rank(ts.size(), ts.size());
    for (std::size_t k = 0; k < options.sweep_order.size(); ++k) {
      if (options.sweep_order[k] < ts.size()) rank[options.sweep_order[k]] = k;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return rank[noisy[a].tile] < rank[noisy[b].tile];
    });
  }

  std::vector<double> scratch;
  auto residual_of = [&](const NoisyTile& nt) {
    double s = 0.0;
    for (std::size_t c : nt.free_cells) s += prob[c];
    return std::abs(s - nt.target_free) / static_cast<double>(ts[nt.tile].tile.cell_count());
  };

  model.converged_ = true;
  model.sweeps_ = 0;
  bool any_active = std::any_of(noisy.begin(), noisy.end(), [](const auto& nt) { return nt.active; });
  if (any_active) {
    model.converged_ = false;
    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
      double worst = 0.0;
      for (std::size_t k : order) {
        auto& nt = noisy[k];
        if (!nt.active) continue;
        const double r = residual_of(nt);
        worst = std::max(worst, r);
        if (r <= 1e-15) continue;
        scratch.clear();
        for (std::size_t c : nt.free_cells) scratch.push_back(prob[c]);
        double x;
        try {
          x = solve_scaling_factor(scratch, nt.target_free);
        } catch (const Error& e) {
          throw Error(ErrorCategory::inconsistent_tiles,
                      "tile '" + ts[nt.tile].name + "': " + e.what());
        }
        for (std::size_t c : nt.free_cells) prob[c] = scale_probability(prob[c], x);
      }
      model.sweeps_ = sweep + 1;
      if (worst <= options.tolerance) {
        model.converged_ = true;
        break;
      }
    }
  }

  double worst = 0.0;
  for (const auto& nt : noisy) {
    if (nt.active) worst = std::max(worst, residual_of(nt));
  }
  model.max_residual_ = worst;
  if (worst > options.tolerance) model.converged_ = false;
  return model;
}

BinaryModel binary_model_from_parameters(std::vector<BinaryTile> tiles, Index n_rows, Index n_cols,
                                         std::vector<double> probabilities,
                                         std::vector<std::int32_t> pinned_by, bool converged,
                                         int sweeps, double max_residual) {
  const std::size_t cells = static_cast<std::size_t>(n_rows) * n_cols;
  if (probabilities.size() != cells || pinned_by.size() != cells) {
    throw Error(ErrorCategory::invalid_input, "binary model snapshot has wrong cell count");
  }
  BinaryModel model(n_rows, n_cols);
  model.tiles_ = std::move(tiles);
  model.prob_ = std::move(probabilities);
  model.pinned_by_ = std::move(pinned_by);
  model.converged_ = converged;
  model.sweeps_ = sweeps;
  model.max_residual_ = max_residual;
  return model;
}

}  // namespace tilechain
