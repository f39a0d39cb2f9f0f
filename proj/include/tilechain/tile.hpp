#pragma once

#include <string>
#include <vector>

#include "tilechain/matrix.hpp"

namespace tilechain {

/// Rectangle r(T) x c(T) over the data matrix. Rows and columns are kept
/// sorted and unique so two tiles covering the same cells compare equal.
struct Tile {
  std::vector<Index> rows;
  std::vector<Index> cols;

  std::size_t cell_count() const noexcept { return rows.size() * cols.size(); }
  void canonicalize();

  friend bool operator==(const Tile&, const Tile&) = default;
  friend auto operator<=>(const Tile&, const Tile&) = default;
};

/// Binary-model constraint: expected frequency of 1s over σ(T) equals gamma.
struct BinaryTile {
  Tile tile;
  double gamma = 0.0;
  std::string name;

  bool exact() const noexcept { return gamma == 0.0 || gamma == 1.0; }
};

/// Real-model constraint on the sum and sum of squares over σ(T).
struct RealTile {
  Tile tile;
  double sum = 0.0;     // f_m
  double sum_sq = 0.0;  // f_v
  std::string name;
};

struct TileStats {
  double sum = 0.0;
  double sum_sq = 0.0;
};

/// fr(T; D): mean value over the covered cells.
double tile_frequency(const Tile& tile, const TransactionMatrix& matrix);

/// (f_m, f_v): sum and sum of squared values over the covered cells.
TileStats tile_stats(const Tile& tile, const TransactionMatrix& matrix);

BinaryTile make_binary_tile(Tile tile, const TransactionMatrix& matrix, std::string name);
RealTile make_real_tile(Tile tile, const TransactionMatrix& matrix, std::string name);

// Throws invalid_input when the tile is empty or leaves the matrix.
void check_tile_bounds(const Tile& tile, Index n_rows, Index n_cols, const std::string& name);

}  // namespace tilechain
