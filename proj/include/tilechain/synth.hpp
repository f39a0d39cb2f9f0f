#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "tilechain/matrix.hpp"
#include "tilechain/scoring.hpp"

namespace tilechain {

struct SynthSpec {
  Index n_rows = 100;
  Index n_cols = 100;
  double density = 0.05;
  ModelKind mode = ModelKind::binary;
  std::uint64_t seed = 42;
};

struct SynthResult {
  TransactionMatrix matrix;
  std::size_t nonzeros_before_patch = 0;
  std::size_t patched_rows = 0;
  std::size_t patched_cols = 0;
};

/// Random matrix with each cell nonzero independently with probability
/// `density`. Binary nonzeros are 1; real nonzeros are uniform on (0, 1).
/// Empty rows, then empty columns, receive one nonzero at a random position.
SynthResult generate(const SynthSpec& spec);

/// `count` random rectangles of `height` x `width` distinct rows/columns.
std::vector<NamedTile> random_tiles(Index n_rows, Index n_cols, std::size_t count, Index height,
                                    Index width, std::uint64_t seed);

struct BenchConfig {
  std::vector<Index> sizes{200, 400, 800};  // square N = M
  std::vector<double> densities{0.01, 0.03, 0.05};
  std::vector<ModelKind> modes{ModelKind::binary, ModelKind::real};
  int reps = 3;
  std::uint64_t seed = 42;
  bool time_inference = true;
  bool time_scores = true;
  std::size_t tile_count = 50;
  Index tile_size = 5;
  InferenceOptions inference;
};

struct BenchRow {
  ModelKind mode = ModelKind::binary;
  Index n_rows = 0;
  Index n_cols = 0;
  double density = 0.0;
  std::string phase;  // infer | global | local
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
  int runs = 0;
  int nonconverged = 0;
};

void write_bench_header(std::ostream& out);
void write_bench_row(std::ostream& out, const BenchRow& row);

/// Times inference over row and column margin tiles, and global and local
/// scoring of a random tile set, for every configuration in the grid. One
/// untimed warm-up run precedes the timed repetitions of each phase. The CSV
/// header goes out first; rows are written and flushed as each configuration
/// finishes. The returned vector holds the same rows.
std::vector<BenchRow> run_benchmark(const BenchConfig& config, std::ostream* csv = nullptr);

/// Parses "0.01,0.02" or a range "0.01..0.05" (step 0.01) or "a..b:step".
std::vector<double> parse_density_grid(std::string_view text);

}  // namespace tilechain
