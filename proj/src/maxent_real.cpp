#include "tilechain/maxent_real.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "tilechain/error.hpp"

namespace tilechain {

RealDual::RealDual(std::vector<Constraint> constraints, std::size_t n_cells)
    : constraints_(std::move(constraints)), n_cells_(n_cells) {
  for (const auto& c : constraints_) {
    for (std::size_t cell : c.cells) {
      if (cell >= n_cells_) throw Error(ErrorCategory::invalid_input, "dual cell out of range");
    }
  }
}

RealDual RealDual::from_tiles(std::span<const RealTile> tiles, Index n_rows, Index n_cols) {
  std::vector<Constraint> constraints;
  constraints.reserve(tiles.size());
  for (const auto& t : tiles) {
    check_tile_bounds(t.tile, n_rows, n_cols, t.name);
    Constraint c{{}, t.sum, t.sum_sq};
    for (Index i : t.tile.rows) {
      for (Index j : t.tile.cols) c.cells.push_back(static_cast<std::size_t>(i) * n_cols + j);
    }
    constraints.push_back(std::move(c));
  }
  return RealDual(std::move(constraints), static_cast<std::size_t>(n_rows) * n_cols);
}

void RealDual::cell_parameters(std::span<const double> lambda, std::span<double> alpha,
                               std::span<double> beta) const {
  std::fill(alpha.begin(), alpha.end(), 0.0);
  std::fill(beta.begin(), beta.end(), 0.0);
  for (std::size_t t = 0; t < constraints_.size(); ++t) {
    const double lm = lambda[2 * t], lv = lambda[2 * t + 1];
    for (std::size_t c : constraints_[t].cells) {
      alpha[c] += lm;
      beta[c] += lv;
    }
  }
}

std::optional<double> RealDual::objective(std::span<const double> lambda) const {
  std::vector<double> alpha(n_cells_), beta(n_cells_);
  cell_parameters(lambda, alpha, beta);
  double value = 0.0;
  for (std::size_t c = 0; c < n_cells_; ++c) {
    if (!(beta[c] > 0.0)) return std::nullopt;
    value -= 0.5 * std::log(std::numbers::pi / beta[c]) + alpha[c] * alpha[c] / (4.0 * beta[c]);
  }
  for (std::size_t t = 0; t < constraints_.size(); ++t) {
    value -= lambda[2 * t] * constraints_[t].sum + lambda[2 * t + 1] * constraints_[t].sum_sq;
  }
  return value;
}

void RealDual::gradient_from_cells(std::span<const double> alpha, std::span<const double> beta,
                                   std::span<double> out) const {
  for (std::size_t t = 0; t < constraints_.size(); ++t) {
    double gm = -constraints_[t].sum, gv = -constraints_[t].sum_sq;
    for (std::size_t c : constraints_[t].cells) {
      const double half_inv = 0.5 / beta[c];
      const double mean = -alpha[c] * half_inv;
      gm += mean;
      gv += half_inv + mean * mean;
    }
    out[2 * t] = gm;
    out[2 * t + 1] = gv;
  }
}

bool RealDual::gradient(std::span<const double> lambda, std::span<double> out) const {
  std::vector<double> alpha(n_cells_), beta(n_cells_);
  cell_parameters(lambda, alpha, beta);
  if (std::any_of(beta.begin(), beta.end(), [](double b) { return !(b > 0.0); })) return false;
  gradient_from_cells(alpha, beta, out);
  return true;
}

void RealDual::negative_hessian_diagonal(std::span<const double> alpha,
                                         std::span<const double> beta,
                                         std::span<double> out) const {
  for (std::size_t t = 0; t < constraints_.size(); ++t) {
    double hm = 0.0, hv = 0.0;
    for (std::size_t c : constraints_[t].cells) {
      const double b = beta[c], a = alpha[c];
      hm += 0.5 / b;
      hv += 0.5 / (b * b) + a * a / (2.0 * b * b * b);
    }
    out[2 * t] = hm;
    out[2 * t + 1] = hv;
  }
}

namespace {

// Maximizes L(lambda + t d) over t in [0, t_max) where t_max keeps every beta
// positive. L is concave in t so its slope is decreasing; safeguarded Newton
// on the slope.
double exact_line_search(std::span<const double> alpha, std::span<const double> beta,
                         std::span<const double> da, std::span<const double> db,
                         double linear_slope) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double t_max = inf;
  for (std::size_t c = 0; c < beta.size(); ++c) {
    if (db[c] < 0.0) t_max = std::min(t_max, -beta[c] / db[c]);
  }

  auto slope = [&](double t, double& curvature) {
    double s = linear_slope, h = 0.0;
    for (std::size_t c = 0; c < beta.size(); ++c) {
      const double a = da[c], b = db[c];
      const double al = alpha[c] + t * a;
      const double be = beta[c] + t * b;
      const double inv = 1.0 / be;
      const double u = al * inv;
      s += 0.5 * inv * (b - a * al) + 0.25 * u * u * b;
      const double w = a - u * b;
      h -= 0.5 * b * b * inv * inv + 0.5 * w * w * inv;
    }
    curvature = h;
    return s;
  };

  double h0;
  const double s0 = slope(0.0, h0);
  if (!(s0 > 0.0)) return 0.0;

  double lo = 0.0, hi = t_max;
  double t = h0 < 0.0 ? -s0 / h0 : 1.0;
  if (!(t < hi)) t = 0.5 * hi;
  for (int iter = 0; iter < 80; ++iter) {
    double h;
    const double s = slope(t, h);
    if (s > 0.0) lo = t;
    else hi = t;
    if (std::abs(s) <= 1e-12 * s0) break;
    double next = h < 0.0 ? t - s / h : inf;
    if (!(next > lo && next < hi)) next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * t;
    if (std::abs(next - t) <= 1e-15 * t) {
      t = next;
      break;
    }
    t = next;
  }
  // Stay strictly inside the feasible region.
  if (!(t < t_max)) t = lo;
  return t;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double inf_norm(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

std::string cell_name(std::size_t cell, Index n_cols) {
  return "(" + std::to_string(cell / n_cols) + "," + std::to_string(cell % n_cols) + ")";
}

}  // namespace

struct RealModelBuilder {
  // Validates tiles, pins point-mass cells and builds the dual over the
  // remaining free cells.
  static void prepare(RealModel& m) {
    const std::size_t n_cells = static_cast<std::size_t>(m.n_rows_) * m.n_cols_;
    m.pinned_.assign(n_cells, 0);
    m.pinned_value_.assign(n_cells, 0.0);
    std::vector<std::int64_t> pinned_by(n_cells, -1);

    struct State {
      std::vector<std::size_t> cells;
      double sum, sum_sq;
      bool active = true;
      bool lost_cells = false;
    };
    std::vector<State> states;
    states.reserve(m.tiles_.size());
    for (auto& t : m.tiles_) {
      t.tile.canonicalize();
      check_tile_bounds(t.tile, m.n_rows_, m.n_cols_, t.name);
      if (!std::isfinite(t.sum) || !std::isfinite(t.sum_sq) || t.sum_sq < 0.0) {
        throw Error(ErrorCategory::degenerate_target, "tile '" + t.name + "' has invalid targets");
      }
      State s{{}, t.sum, t.sum_sq};
      s.cells.reserve(t.tile.cell_count());
      for (Index i : t.tile.rows) {
        for (Index j : t.tile.cols) s.cells.push_back(m.cell(i, j));
      }
      states.push_back(std::move(s));
    }

    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t t = 0; t < states.size(); ++t) {
        auto& s = states[t];
        if (!s.active) continue;
        std::int64_t blocker = -1;
        auto kept = std::remove_if(s.cells.begin(), s.cells.end(), [&](std::size_t c) {
          if (!m.pinned_[c]) return false;
          s.sum -= m.pinned_value_[c];
          s.sum_sq -= m.pinned_value_[c] * m.pinned_value_[c];
          blocker = pinned_by[c];
          s.lost_cells = true;
          return true;
        });
        s.cells.erase(kept, s.cells.end());
        if (s.cells.empty()) {
          s.active = false;
          continue;
        }
        const double n = static_cast<double>(s.cells.size());
        const double mean = s.sum / n;
        const double second = s.sum_sq / n;
        const double variance = second - mean * mean;
        const double tol = 1e-9 * std::max(second, 1e-12);
        if (variance < -tol) {
          if (s.lost_cells) {
            std::string msg = "tile '" + m.tiles_[t].name +
                              "' has targets inconsistent with cells fixed by tile '" +
                              (blocker >= 0 ? m.tiles_[blocker].name : std::string("?")) + "'";
            throw Error(ErrorCategory::inconsistent_tiles, msg);
          }
          throw Error(ErrorCategory::degenerate_target,
                      "tile '" + m.tiles_[t].name + "' implies a negative variance");
        }
        if (variance <= tol) {
          for (std::size_t c : s.cells) {
            m.pinned_[c] = 1;
            m.pinned_value_[c] = mean;
            pinned_by[c] = static_cast<std::int64_t>(t);
          }
          s.cells.clear();
          s.active = false;
          changed = true;
        }
      }
    }

    // Dual over free cells.
    std::vector<std::int64_t> dual_index(n_cells, -1);
    m.free_cells_.clear();
    for (std::size_t c = 0; c < n_cells; ++c) {
      if (!m.pinned_[c]) {
        dual_index[c] = static_cast<std::int64_t>(m.free_cells_.size());
        m.free_cells_.push_back(c);
      }
    }
    std::vector<RealDual::Constraint> constraints;
    std::vector<std::uint8_t> covered(m.free_cells_.size(), 0);
    m.active_tile_.assign(m.tiles_.size(), -1);
    for (std::size_t t = 0; t < states.size(); ++t) {
      if (!states[t].active) continue;
      RealDual::Constraint con{{}, states[t].sum, states[t].sum_sq};
      con.cells.reserve(states[t].cells.size());
      for (std::size_t c : states[t].cells) {
        const auto d = static_cast<std::size_t>(dual_index[c]);
        con.cells.push_back(d);
        covered[d] = 1;
      }
      m.active_tile_[t] = static_cast<std::int64_t>(constraints.size());
      constraints.push_back(std::move(con));
    }
    for (std::size_t d = 0; d < covered.size(); ++d) {
      if (!covered[d]) {
        throw Error(ErrorCategory::invalid_input,
                    "cell " + cell_name(m.free_cells_[d], m.n_cols_) + " is not covered by any tile");
      }
    }
    m.dual_.emplace(std::move(constraints), m.free_cells_.size());
  }

  static std::vector<double> dual_lambda(const RealModel& m) {
    std::vector<double> lambda(m.dual_->parameter_count(), 0.0);
    for (std::size_t t = 0; t < m.tiles_.size(); ++t) {
      if (m.active_tile_[t] < 0) continue;
      const auto k = static_cast<std::size_t>(m.active_tile_[t]);
      lambda[2 * k] = m.lambda_m_[t];
      lambda[2 * k + 1] = m.lambda_v_[t];
    }
    return lambda;
  }

  // Stores dual parameters back per input tile and expands alpha/beta.
  static void set_parameters(RealModel& m, std::span<const double> lambda) {
    m.lambda_m_.assign(m.tiles_.size(), 0.0);
    m.lambda_v_.assign(m.tiles_.size(), 0.0);
    for (std::size_t t = 0; t < m.tiles_.size(); ++t) {
      if (m.active_tile_[t] < 0) continue;
      const auto k = static_cast<std::size_t>(m.active_tile_[t]);
      m.lambda_m_[t] = lambda[2 * k];
      m.lambda_v_[t] = lambda[2 * k + 1];
    }
    std::vector<double> a(m.free_cells_.size()), b(m.free_cells_.size());
    m.dual_->cell_parameters(lambda, a, b);
    const std::size_t n_cells = static_cast<std::size_t>(m.n_rows_) * m.n_cols_;
    m.alpha_.assign(n_cells, 0.0);
    m.beta_.assign(n_cells, 0.0);
    for (std::size_t d = 0; d < m.free_cells_.size(); ++d) {
      m.alpha_[m.free_cells_[d]] = a[d];
      m.beta_[m.free_cells_[d]] = b[d];
    }
  }
};

double RealModel::mean(Index i, Index j) const {
  const auto c = cell(i, j);
  return pinned_[c] ? pinned_value_[c] : -alpha_[c] / (2.0 * beta_[c]);
}

double RealModel::variance(Index i, Index j) const {
  const auto c = cell(i, j);
  return pinned_[c] ? 0.0 : 1.0 / (2.0 * beta_[c]);
}

std::vector<TileResidual> RealModel::residuals() const {
  std::vector<TileResidual> out;
  out.reserve(tiles_.size());
  for (const auto& t : tiles_) {
    TileResidual r{0.0, 0.0, t.sum, t.sum_sq};
    for (Index i : t.tile.rows) {
      for (Index j : t.tile.cols) {
        const double mu = mean(i, j);
        r.expected_sum += mu;
        r.expected_sum_sq += mu * mu + variance(i, j);
      }
    }
    out.push_back(r);
  }
  return out;
}

double RealModel::dual_objective() const {
  if (!dual_) return 0.0;
  auto value = dual_->objective(RealModelBuilder::dual_lambda(*this));
  if (!value) throw Error(ErrorCategory::inference_failed, "model parameters are infeasible");
  return *value;
}

std::vector<double> RealModel::dual_gradient() const {
  std::vector<double> out(2 * tiles_.size(), 0.0);
  if (!dual_) return out;
  std::vector<double> g(dual_->parameter_count());
  if (!dual_->gradient(RealModelBuilder::dual_lambda(*this), g)) {
    throw Error(ErrorCategory::inference_failed, "model parameters are infeasible");
  }
  for (std::size_t t = 0; t < tiles_.size(); ++t) {
    if (active_tile_[t] < 0) continue;
    const auto k = static_cast<std::size_t>(active_tile_[t]);
    out[2 * t] = g[2 * k];
    out[2 * t + 1] = g[2 * k + 1];
  }
  return out;
}

RealModel infer_real(std::vector<RealTile> tiles, Index n_rows, Index n_cols,
                     const RealInferenceOptions& options, const RealModel* warm_start) {
  RealModel m;
  m.n_rows_ = n_rows;
  m.n_cols_ = n_cols;
  m.tiles_ = std::move(tiles);
  RealModelBuilder::prepare(m);

  const RealDual& dual = *m.dual_;
  const std::size_t n_params = dual.parameter_count();
  const std::size_t n_free = dual.cell_count();
  std::vector<double> lambda(n_params, 0.0);
  std::vector<double> alpha(n_free), beta(n_free);

  bool initialized = false;
  if (warm_start != nullptr && warm_start->n_rows() == n_rows && warm_start->n_cols() == n_cols) {
    std::map<Tile, std::pair<double, double>> previous;
    for (std::size_t t = 0; t < warm_start->tiles().size(); ++t) {
      previous.try_emplace(warm_start->tiles()[t].tile, warm_start->lambda_m()[t],
                           warm_start->lambda_v()[t]);
    }
    for (std::size_t t = 0; t < m.tiles_.size(); ++t) {
      if (m.active_tile_[t] < 0) continue;
      const auto k = static_cast<std::size_t>(m.active_tile_[t]);
      if (auto it = previous.find(m.tiles_[t].tile); it != previous.end()) {
        lambda[2 * k] = it->second.first;
        lambda[2 * k + 1] = it->second.second;
      }
    }
    dual.cell_parameters(lambda, alpha, beta);
    initialized = std::all_of(beta.begin(), beta.end(), [](double b) { return b > 0.0; });
  }
  if (!initialized) {
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> init_m(-0.1, 0.1), init_v(0.5, 1.5);
    for (std::size_t k = 0; k < n_params / 2; ++k) {
      lambda[2 * k] = init_m(rng);
      lambda[2 * k + 1] = init_v(rng);
    }
    dual.cell_parameters(lambda, alpha, beta);
  }

  std::vector<double> grad(n_params), grad_prev(n_params), z(n_params), z_prev(n_params),
      dir(n_params), precond(n_params, 1.0), da(n_free), db(n_free);
  const auto& cons = dual.constraints();

  m.converged_ = false;
  m.iterations_ = 0;
  int since_restart = 0;
  int stalls = 0;
  for (int iter = 0;; ++iter) {
    dual.gradient_from_cells(alpha, beta, grad);
    m.gradient_norm_ = inf_norm(grad);
    if (m.gradient_norm_ <= options.tolerance) {
      m.converged_ = true;
      break;
    }
    if (iter >= options.max_iterations) break;
    m.iterations_ = iter + 1;

    if (options.precondition) dual.negative_hessian_diagonal(alpha, beta, precond);
    for (std::size_t k = 0; k < n_params; ++k) z[k] = grad[k] / precond[k];

    bool restart = since_restart == 0 || since_restart >= static_cast<int>(n_params);
    if (!restart) {
      double num = 0.0;
      for (std::size_t k = 0; k < n_params; ++k) num += z[k] * (grad[k] - grad_prev[k]);
      const double den = dot(z_prev, grad_prev);
      const double pr = den > 0.0 ? std::max(0.0, num / den) : 0.0;
      for (std::size_t k = 0; k < n_params; ++k) dir[k] = z[k] + pr * dir[k];
      if (!(dot(dir, grad) > 0.0)) restart = true;
    }
    if (restart) {
      dir = z;
      since_restart = 0;
    }

    std::fill(da.begin(), da.end(), 0.0);
    std::fill(db.begin(), db.end(), 0.0);
    double linear_slope = 0.0;
    for (std::size_t t = 0; t < cons.size(); ++t) {
      const double dm = dir[2 * t], dv = dir[2 * t + 1];
      linear_slope -= dm * cons[t].sum + dv * cons[t].sum_sq;
      for (std::size_t c : cons[t].cells) {
        da[c] += dm;
        db[c] += dv;
      }
    }
    const double step = exact_line_search(alpha, beta, da, db, linear_slope);
    if (!(step > 0.0)) {
      if (since_restart == 0 && ++stalls > 2) break;
      since_restart = 0;
      continue;
    }
    stalls = 0;
    for (std::size_t k = 0; k < n_params; ++k) lambda[k] += step * dir[k];
    if ((iter + 1) % 50 == 0) {
      dual.cell_parameters(lambda, alpha, beta);
    } else {
      for (std::size_t c = 0; c < n_free; ++c) {
        alpha[c] += step * da[c];
        beta[c] += step * db[c];
      }
    }
    grad_prev = grad;
    z_prev = z;
    ++since_restart;
  }

  RealModelBuilder::set_parameters(m, lambda);
  return m;
}

RealModel real_model_from_parameters(std::vector<RealTile> tiles, Index n_rows, Index n_cols,
                                     std::vector<double> lambda_m, std::vector<double> lambda_v,
                                     bool converged, int iterations, double gradient_norm) {
  if (lambda_m.size() != tiles.size() || lambda_v.size() != tiles.size()) {
    throw Error(ErrorCategory::invalid_input, "real model snapshot needs one multiplier pair per tile");
  }
  RealModel m;
  m.n_rows_ = n_rows;
  m.n_cols_ = n_cols;
  m.tiles_ = std::move(tiles);
  RealModelBuilder::prepare(m);
  m.lambda_m_ = std::move(lambda_m);
  m.lambda_v_ = std::move(lambda_v);
  RealModelBuilder::set_parameters(m, RealModelBuilder::dual_lambda(m));
  for (std::size_t c : m.free_cells_) {
    if (!(m.beta_[c] > 0.0)) {
      throw Error(ErrorCategory::invalid_input, "snapshot multipliers give a non-positive beta");
    }
  }
  m.converged_ = converged;
  m.iterations_ = iterations;
  m.gradient_norm_ = gradient_norm;
  return m;
}

CellLogLik log_density_real(const RealModel& model, Index i, Index j, double value) {
  if (i >= model.n_rows() || j >= model.n_cols()) {
    throw Error(ErrorCategory::invalid_input, "cell out of bounds");
  }
  CellLogLik out;
  if (model.pinned(i, j)) {
    out.pinned = true;
    const double fixed = model.pinned_value(i, j);
    if (std::abs(value - fixed) > 1e-9 * std::max(1.0, std::abs(fixed))) {
      out.impossible = true;
      out.value = -std::numeric_limits<double>::infinity();
    }
    return out;
  }
  const double var = model.variance(i, j);
  const double diff = value - model.mean(i, j);
  out.value = -0.5 * std::log(2.0 * std::numbers::pi * var) - diff * diff / (2.0 * var);
  return out;
}

}  // namespace tilechain
