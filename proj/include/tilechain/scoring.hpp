#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tilechain/maxent_binary.hpp"
#include "tilechain/maxent_real.hpp"
#include "tilechain/miner.hpp"

namespace tilechain {

enum class ModelKind { binary, real };
enum class ScoreKind { global, local };

const char* to_string(ModelKind kind) noexcept;
const char* to_string(ScoreKind kind) noexcept;
ModelKind model_kind_from_string(std::string_view text);
ScoreKind score_kind_from_string(std::string_view text);

using Model = std::variant<BinaryModel, RealModel>;

ModelKind kind_of(const Model& model) noexcept;
bool is_converged(const Model& model) noexcept;

struct NamedTile {
  Tile tile;
  std::string name;

  friend bool operator==(const NamedTile& a, const NamedTile& b) { return a.tile == b.tile; }
};

/// Margin tiles over the document rows: one per entity column, one per
/// (row, domain) and one per domain spanning every row.
struct BackgroundTiles {
  std::vector<NamedTile> col_tiles;
  std::vector<NamedTile> row_tiles;
  std::vector<NamedTile> dom_tiles;

  std::vector<NamedTile> all() const;
};

BackgroundTiles build_background(const Dataset& dataset);

/// Plain row and column margins over an unlabelled matrix.
std::vector<NamedTile> margin_tiles(Index n_rows, Index n_cols);

std::vector<BinaryTile> binary_targets(std::span<const NamedTile> tiles,
                                       const TransactionMatrix& data);
std::vector<RealTile> real_targets(std::span<const NamedTile> tiles, const TransactionMatrix& data);

/// Tiles standing for a bicluster or a chain of them: one tile per entity
/// pair (e_i, e_j), spanning the rows that contain both entities.
struct PatternTiles {
  std::string source;
  std::vector<NamedTile> tiles;
  std::vector<std::string> warnings;
};

PatternTiles bicluster_to_tiles(const Bicluster& bicluster, const Dataset& dataset);

/// Union of member tiles; identical rectangles appear once.
PatternTiles chain_to_tiles(std::string source, std::span<const Bicluster* const> members,
                            const Dataset& dataset);

/// Appends tiles not already present (by rectangle).
void merge_tiles(std::vector<NamedTile>& into, std::span<const NamedTile> extra);

struct InferenceOptions {
  BinaryInferenceOptions binary;
  RealInferenceOptions real;
};

/// Fits the requested model family to `tiles` with targets taken from
/// `data` (already binarized or normalized to match the family).
Model infer_model(ModelKind kind, std::span<const NamedTile> tiles, const TransactionMatrix& data,
                  const InferenceOptions& options = {}, const Model* warm_start = nullptr);

struct ScoreReport {
  std::string pattern_id;
  ScoreKind kind = ScoreKind::local;
  ModelKind model = ModelKind::binary;
  double value = 0.0;
  bool infinite = false;
  std::vector<double> per_tile;
};

/// KL(Bernoulli(q) || Bernoulli(p)) with 0 log 0 = 0; +inf when q puts mass
/// where p has none.
double bernoulli_kl(double q, double p);

/// KL(N(mean1, var1) || N(mean2, var2)).
double gaussian_kl(double mean1, double var1, double mean2, double var2);

/// Sum over every cell of KL(p_B || p_back), where p_B is re-inferred over
/// the background tiles plus the pattern's tiles, warm-started from
/// `background_model`. Per-tile entries sum the cell KL over each pattern
/// tile's cells.
ScoreReport global_score(const PatternTiles& pattern, std::span<const NamedTile> background_tiles,
                         const Model& background_model, const TransactionMatrix& data,
                         const InferenceOptions& options = {});

/// -sum over pattern tiles, then over their cells, of log p_back(D(i,j)).
/// With `dedup_cells` each covered cell counts once.
ScoreReport local_score(const PatternTiles& pattern, const Model& background_model,
                        const TransactionMatrix& data, bool dedup_cells = false);

}  // namespace tilechain
