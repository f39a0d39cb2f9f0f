#include "tilechain/tile.hpp"

#include <algorithm>

#include "tilechain/error.hpp"

namespace tilechain {

void Tile::canonicalize() {
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
}

TileStats tile_stats(const Tile& tile, const TransactionMatrix& matrix) {
  TileStats stats;
  // Walk whichever side is cheaper: row entries filtered by column, or the
  // reverse. Both sides are sorted so membership is a binary search.
  if (tile.rows.size() <= tile.cols.size()) {
    for (Index i : tile.rows) {
      for (const auto& e : matrix.row(i)) {
        if (std::binary_search(tile.cols.begin(), tile.cols.end(), e.col)) {
          stats.sum += e.value;
          stats.sum_sq += e.value * e.value;
        }
      }
    }
  } else {
    for (Index j : tile.cols) {
      for (const auto& e : matrix.column(j)) {
        if (std::binary_search(tile.rows.begin(), tile.rows.end(), e.row)) {
          stats.sum += e.value;
          stats.sum_sq += e.value * e.value;
        }
      }
    }
  }
  return stats;
}

double tile_frequency(const Tile& tile, const TransactionMatrix& matrix) {
  const auto cells = tile.cell_count();
  if (cells == 0) return 0.0;
  return tile_stats(tile, matrix).sum / static_cast<double>(cells);
}

void check_tile_bounds(const Tile& tile, Index n_rows, Index n_cols, const std::string& name) {
  if (tile.rows.empty() || tile.cols.empty()) {
    throw Error(ErrorCategory::invalid_input, "tile '" + name + "' is empty");
  }
  if (tile.rows.back() >= n_rows || tile.cols.back() >= n_cols) {
    throw Error(ErrorCategory::invalid_input, "tile '" + name + "' leaves the matrix");
  }
}

BinaryTile make_binary_tile(Tile tile, const TransactionMatrix& matrix, std::string name) {
  tile.canonicalize();
  check_tile_bounds(tile, matrix.n_rows(), matrix.n_cols(), name);
  const double gamma = tile_frequency(tile, matrix);
  return {std::move(tile), gamma, std::move(name)};
}

RealTile make_real_tile(Tile tile, const TransactionMatrix& matrix, std::string name) {
  tile.canonicalize();
  check_tile_bounds(tile, matrix.n_rows(), matrix.n_cols(), name);
  const auto stats = tile_stats(tile, matrix);
  return {std::move(tile), stats.sum, stats.sum_sq, std::move(name)};
}

}  // namespace tilechain
