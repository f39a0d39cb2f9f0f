#include "tilechain/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "tilechain/error.hpp"

namespace tilechain {

const char* to_string(ModelKind kind) noexcept {
  return kind == ModelKind::binary ? "binary" : "real";
}

const char* to_string(ScoreKind kind) noexcept {
  return kind == ScoreKind::global ? "global" : "local";
}

ModelKind model_kind_from_string(std::string_view text) {
  if (text == "binary") return ModelKind::binary;
  if (text == "real") return ModelKind::real;
  throw Error(ErrorCategory::invalid_input, "unknown model kind '" + std::string(text) + "'");
}

ScoreKind score_kind_from_string(std::string_view text) {
  if (text == "global") return ScoreKind::global;
  if (text == "local") return ScoreKind::local;
  throw Error(ErrorCategory::invalid_input, "unknown score kind '" + std::string(text) + "'");
}

ModelKind kind_of(const Model& model) noexcept {
  return std::holds_alternative<BinaryModel>(model) ? ModelKind::binary : ModelKind::real;
}

bool is_converged(const Model& model) noexcept {
  return std::visit([](const auto& m) { return m.converged(); }, model);
}

std::vector<NamedTile> BackgroundTiles::all() const {
  std::vector<NamedTile> out;
  out.reserve(col_tiles.size() + row_tiles.size() + dom_tiles.size());
  out.insert(out.end(), row_tiles.begin(), row_tiles.end());
  out.insert(out.end(), col_tiles.begin(), col_tiles.end());
  out.insert(out.end(), dom_tiles.begin(), dom_tiles.end());
  return out;
}

BackgroundTiles build_background(const Dataset& dataset) {
  const Index n_rows = dataset.matrix.n_rows();
  std::vector<Index> all_rows(n_rows);
  for (Index i = 0; i < n_rows; ++i) all_rows[i] = i;

  BackgroundTiles bg;
  for (const auto& domain : dataset.domains) {
    if (domain.entity_ids.empty()) continue;
    for (Index e : domain.entity_ids) {
      bg.col_tiles.push_back({{all_rows, {e}}, "col:" + dataset.entity_labels[e]});
    }
    for (Index i = 0; i < n_rows; ++i) {
      bg.row_tiles.push_back(
          {{{i}, domain.entity_ids}, "row:" + dataset.doc_ids[i] + "/" + domain.name});
    }
    bg.dom_tiles.push_back({{all_rows, domain.entity_ids}, "dom:" + domain.name});
  }
  return bg;
}

std::vector<NamedTile> margin_tiles(Index n_rows, Index n_cols) {
  std::vector<Index> all_rows(n_rows), all_cols(n_cols);
  for (Index i = 0; i < n_rows; ++i) all_rows[i] = i;
  for (Index j = 0; j < n_cols; ++j) all_cols[j] = j;
  std::vector<NamedTile> out;
  out.reserve(static_cast<std::size_t>(n_rows) + n_cols);
  for (Index i = 0; i < n_rows; ++i) out.push_back({{{i}, all_cols}, "row:" + std::to_string(i)});
  for (Index j = 0; j < n_cols; ++j) out.push_back({{all_rows, {j}}, "col:" + std::to_string(j)});
  return out;
}

std::vector<BinaryTile> binary_targets(std::span<const NamedTile> tiles,
                                       const TransactionMatrix& data) {
  std::vector<BinaryTile> out;
  out.reserve(tiles.size());
  for (const auto& t : tiles) out.push_back(make_binary_tile(t.tile, data, t.name));
  return out;
}

std::vector<RealTile> real_targets(std::span<const NamedTile> tiles, const TransactionMatrix& data) {
  std::vector<RealTile> out;
  out.reserve(tiles.size());
  for (const auto& t : tiles) out.push_back(make_real_tile(t.tile, data, t.name));
  return out;
}

namespace {

std::vector<Index> rows_containing_both(const TransactionMatrix& m, Index a, Index b) {
  std::vector<Index> out;
  auto ca = m.column(a);
  auto cb = m.column(b);
  std::size_t x = 0, y = 0;
  while (x < ca.size() && y < cb.size()) {
    if (ca[x].row < cb[y].row) ++x;
    else if (cb[y].row < ca[x].row) ++y;
    else {
      out.push_back(ca[x].row);
      ++x;
      ++y;
    }
  }
  return out;
}

}  // namespace

PatternTiles bicluster_to_tiles(const Bicluster& bicluster, const Dataset& dataset) {
  PatternTiles out;
  out.source = bicluster.id;
  const auto& m = dataset.matrix;
  for (Index ei : bicluster.left) {
    for (Index ej : bicluster.right) {
      if (ei >= m.n_cols() || ej >= m.n_cols()) {
        throw Error(ErrorCategory::invalid_input,
                    "bicluster '" + bicluster.id + "' references an unknown entity");
      }
      const std::string name =
          "pair:" + dataset.entity_labels[ei] + "|" + dataset.entity_labels[ej];
      auto rows = rows_containing_both(m, ei, ej);
      if (rows.empty()) {
        out.warnings.push_back(name + " never co-occurs; tile omitted");
        continue;
      }
      Tile tile{std::move(rows), {ei, ej}};
      tile.canonicalize();
      out.tiles.push_back({std::move(tile), name});
    }
  }
  return out;
}

void merge_tiles(std::vector<NamedTile>& into, std::span<const NamedTile> extra) {
  std::set<Tile> seen;
  for (const auto& t : into) seen.insert(t.tile);
  for (const auto& t : extra) {
    if (seen.insert(t.tile).second) into.push_back(t);
  }
}

PatternTiles chain_to_tiles(std::string source, std::span<const Bicluster* const> members,
                            const Dataset& dataset) {
  PatternTiles out;
  out.source = std::move(source);
  for (const Bicluster* b : members) {
    auto part = bicluster_to_tiles(*b, dataset);
    merge_tiles(out.tiles, part.tiles);
    out.warnings.insert(out.warnings.end(), part.warnings.begin(), part.warnings.end());
  }
  return out;
}

Model infer_model(ModelKind kind, std::span<const NamedTile> tiles, const TransactionMatrix& data,
                  const InferenceOptions& options, const Model* warm_start) {
  if (kind == ModelKind::binary) {
    const BinaryModel* warm = warm_start ? std::get_if<BinaryModel>(warm_start) : nullptr;
    return infer_binary(binary_targets(tiles, data), data.n_rows(), data.n_cols(), options.binary,
                        warm);
  }
  const RealModel* warm = warm_start ? std::get_if<RealModel>(warm_start) : nullptr;
  return infer_real(real_targets(tiles, data), data.n_rows(), data.n_cols(), options.real, warm);
}

double bernoulli_kl(double q, double p) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double kl = 0.0;
  if (q > 0.0) kl += p > 0.0 ? q * std::log(q / p) : inf;
  if (q < 1.0) kl += p < 1.0 ? (1.0 - q) * std::log((1.0 - q) / (1.0 - p)) : inf;
  return kl;
}

double gaussian_kl(double mean1, double var1, double mean2, double var2) {
  const double diff = mean1 - mean2;
  return 0.5 * std::log(var2 / var1) + (var1 + diff * diff) / (2.0 * var2) - 0.5;
}

namespace {

double real_cell_kl(const RealModel& b, const RealModel& back, Index i, Index j) {
  const bool pb = b.pinned(i, j), pk = back.pinned(i, j);
  if (pb || pk) {
    if (pb && pk && b.pinned_value(i, j) == back.pinned_value(i, j)) return 0.0;
    return std::numeric_limits<double>::infinity();
  }
  // Written in (alpha, beta) form: cell variance is 1/(2 beta).
  const double beta_b = b.beta(i, j), beta_k = back.beta(i, j);
  const double shift = back.alpha(i, j) / (2.0 * beta_k) - b.alpha(i, j) / (2.0 * beta_b);
  return 0.5 * std::log(beta_b / beta_k) + beta_k / (2.0 * beta_b) + beta_k * shift * shift - 0.5;
}

template <typename CellKl>
ScoreReport sum_kl(const PatternTiles& pattern, Index n_rows, Index n_cols, CellKl&& cell_kl) {
  ScoreReport report;
  report.pattern_id = pattern.source;
  report.kind = ScoreKind::global;
  for (Index i = 0; i < n_rows; ++i) {
    for (Index j = 0; j < n_cols; ++j) {
      const double kl = cell_kl(i, j);
      if (std::isinf(kl)) report.infinite = true;
      else report.value += kl;
    }
  }
  for (const auto& t : pattern.tiles) {
    double s = 0.0;
    for (Index i : t.tile.rows) {
      for (Index j : t.tile.cols) s += cell_kl(i, j);
    }
    report.per_tile.push_back(s);
  }
  if (report.infinite) report.value = std::numeric_limits<double>::infinity();
  // KL is nonnegative; clamp rounding noise from near-identical cells.
  else report.value = std::max(report.value, 0.0);
  return report;
}

}  // namespace

ScoreReport global_score(const PatternTiles& pattern, std::span<const NamedTile> background_tiles,
                         const Model& background_model, const TransactionMatrix& data,
                         const InferenceOptions& options) {
  std::vector<NamedTile> tiles(background_tiles.begin(), background_tiles.end());
  merge_tiles(tiles, pattern.tiles);

  Model with_pattern;
  try {
    with_pattern = infer_model(kind_of(background_model), tiles, data, options, &background_model);
  } catch (const Error& e) {
    throw Error(e.category(), "pattern '" + pattern.source + "': " + e.what());
  }

  ScoreReport report;
  if (const auto* back = std::get_if<BinaryModel>(&background_model)) {
    const auto& b = std::get<BinaryModel>(with_pattern);
    report = sum_kl(pattern, data.n_rows(), data.n_cols(), [&](Index i, Index j) {
      return bernoulli_kl(b.probability(i, j), back->probability(i, j));
    });
    report.model = ModelKind::binary;
  } else {
    const auto& back_real = std::get<RealModel>(background_model);
    const auto& b = std::get<RealModel>(with_pattern);
    report = sum_kl(pattern, data.n_rows(), data.n_cols(),
                    [&](Index i, Index j) { return real_cell_kl(b, back_real, i, j); });
    report.model = ModelKind::real;
  }
  return report;
}

ScoreReport local_score(const PatternTiles& pattern, const Model& background_model,
                        const TransactionMatrix& data, bool dedup_cells) {
  ScoreReport report;
  report.pattern_id = pattern.source;
  report.kind = ScoreKind::local;
  report.model = kind_of(background_model);

  std::set<std::pair<Index, Index>> counted;
  for (const auto& t : pattern.tiles) {
    double tile_sum = 0.0;
    bool tile_infinite = false;
    for (Index i : t.tile.rows) {
      for (Index j : t.tile.cols) {
        if (dedup_cells && !counted.emplace(i, j).second) continue;
        const double observed = data.value(i, j);
        CellLogLik ll;
        if (const auto* b = std::get_if<BinaryModel>(&background_model)) {
          ll = log_prob_binary(*b, i, j, observed != 0.0 ? 1 : 0);
        } else {
          ll = log_density_real(std::get<RealModel>(background_model), i, j, observed);
        }
        if (ll.impossible) tile_infinite = true;
        else tile_sum -= ll.value;
      }
    }
    if (tile_infinite) {
      report.infinite = true;
      report.per_tile.push_back(std::numeric_limits<double>::infinity());
    } else {
      // -log 1 is -0.0; keep pinned contributions at +0.
      report.per_tile.push_back(tile_sum + 0.0);
      report.value += tile_sum;
    }
  }
  report.value += 0.0;
  if (report.infinite) report.value = std::numeric_limits<double>::infinity();
  return report;
}

}  // namespace tilechain
