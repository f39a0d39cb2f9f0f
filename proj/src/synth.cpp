#include "tilechain/synth.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "tilechain/error.hpp"

namespace tilechain {

namespace {

double draw_value(std::mt19937_64& rng, ModelKind mode) {
  if (mode == ModelKind::binary) return 1.0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double v = 0.0;
  while (v == 0.0) v = unit(rng);
  return v;
}

}  // namespace

SynthResult generate(const SynthSpec& spec) {
  if (spec.n_rows == 0 || spec.n_cols == 0) {
    throw Error(ErrorCategory::invalid_input, "synthetic matrix needs at least one row and column");
  }
  if (!(spec.density > 0.0 && spec.density < 1.0)) {
    throw Error(ErrorCategory::invalid_input, "density must lie strictly between 0 and 1");
  }
  std::mt19937_64 rng(spec.seed);
  std::bernoulli_distribution coin(spec.density);

  SynthResult result;
  std::vector<Triplet> cells;
  std::vector<std::uint8_t> row_used(spec.n_rows, 0), col_used(spec.n_cols, 0);
  for (Index i = 0; i < spec.n_rows; ++i) {
    for (Index j = 0; j < spec.n_cols; ++j) {
      if (!coin(rng)) continue;
      cells.push_back({i, j, draw_value(rng, spec.mode)});
      row_used[i] = col_used[j] = 1;
    }
  }
  result.nonzeros_before_patch = cells.size();

  std::uniform_int_distribution<Index> pick_col(0, spec.n_cols - 1);
  std::uniform_int_distribution<Index> pick_row(0, spec.n_rows - 1);
  for (Index i = 0; i < spec.n_rows; ++i) {
    if (row_used[i]) continue;
    const Index j = pick_col(rng);
    cells.push_back({i, j, draw_value(rng, spec.mode)});
    row_used[i] = col_used[j] = 1;
    ++result.patched_rows;
  }
  for (Index j = 0; j < spec.n_cols; ++j) {
    if (col_used[j]) continue;
    const Index i = pick_row(rng);
    cells.push_back({i, j, draw_value(rng, spec.mode)});
    col_used[j] = 1;
    ++result.patched_cols;
  }

  const ValueMode mode = spec.mode == ModelKind::binary ? ValueMode::binary : ValueMode::real;
  result.matrix = TransactionMatrix(spec.n_rows, spec.n_cols, mode, std::move(cells));
  return result;
}

std::vector<NamedTile> random_tiles(Index n_rows, Index n_cols, std::size_t count, Index height,
                                    Index width, std::uint64_t seed) {
  height = std::min(height, n_rows);
  width = std::min(width, n_cols);
  std::mt19937_64 rng(seed);
  std::vector<Index> rows(n_rows), cols(n_cols);
  std::iota(rows.begin(), rows.end(), Index{0});
  std::iota(cols.begin(), cols.end(), Index{0});

  std::vector<NamedTile> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    // Partial Fisher-Yates: the first `height` entries become the sample.
    for (Index a = 0; a < height; ++a) {
      std::uniform_int_distribution<Index> d(a, n_rows - 1);
      std::swap(rows[a], rows[d(rng)]);
    }
    for (Index a = 0; a < width; ++a) {
      std::uniform_int_distribution<Index> d(a, n_cols - 1);
      std::swap(cols[a], cols[d(rng)]);
    }
    Tile t{{rows.begin(), rows.begin() + height}, {cols.begin(), cols.begin() + width}};
    t.canonicalize();
    out.push_back({std::move(t), "rand:" + std::to_string(k)});
  }
  return out;
}

void write_bench_header(std::ostream& out) {
  out << "mode,N,M,beta,phase,mean_seconds,std_seconds,runs,nonconverged\n";
  out.flush();
}

void write_bench_row(std::ostream& out, const BenchRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%u,%u,%g,%s,%.6f,%.6f,%d,%d\n", to_string(row.mode),
                row.n_rows, row.n_cols, row.density, row.phase.c_str(), row.mean_seconds,
                row.std_seconds, row.runs, row.nonconverged);
  out << buf;
  out.flush();
}

namespace {

struct Timings {
  std::vector<double> seconds;
  int nonconverged = 0;
};

BenchRow summarize(ModelKind mode, Index n, double density, std::string phase, const Timings& t) {
  BenchRow row;
  row.mode = mode;
  row.n_rows = row.n_cols = n;
  row.density = density;
  row.phase = std::move(phase);
  row.runs = static_cast<int>(t.seconds.size());
  row.nonconverged = t.nonconverged;
  if (t.seconds.empty()) return row;
  row.mean_seconds = std::accumulate(t.seconds.begin(), t.seconds.end(), 0.0) / row.runs;
  double ss = 0.0;
  for (double s : t.seconds) ss += (s - row.mean_seconds) * (s - row.mean_seconds);
  row.std_seconds = row.runs > 1 ? std::sqrt(ss / (row.runs - 1)) : 0.0;
  return row;
}

template <typename F>
double time_call(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::vector<BenchRow> run_benchmark(const BenchConfig& config, std::ostream* csv) {
  if (config.reps < 1) throw Error(ErrorCategory::invalid_input, "reps must be at least 1");
  std::vector<BenchRow> rows;
  if (csv) write_bench_header(*csv);
  auto emit = [&](BenchRow row) {
    if (csv) write_bench_row(*csv, row);
    rows.push_back(std::move(row));
  };

  for (ModelKind mode : config.modes) {
    for (Index n : config.sizes) {
      for (double density : config.densities) {
        Timings infer_t, global_t, local_t;
        // Run 0 is the warm-up and is not recorded.
        for (int run = 0; run <= config.reps; ++run) {
          SynthSpec spec{n, n, density, mode,
                         config.seed + 7919u * static_cast<std::uint64_t>(run)};
          const auto data = generate(spec).matrix;
          const auto margins = margin_tiles(n, n);

          Model background;
          const double t_infer =
              time_call([&] { background = infer_model(mode, margins, data, config.inference); });
          const bool ok = is_converged(background);
          if (run > 0 && config.time_inference) {
            if (ok) infer_t.seconds.push_back(t_infer);
            else ++infer_t.nonconverged;
          }
          if (!config.time_scores) continue;

          PatternTiles pattern;
          pattern.source = "random";
          pattern.tiles = random_tiles(n, n, config.tile_count, config.tile_size, config.tile_size,
                                       spec.seed + 1);
          const double t_local = time_call([&] { (void)local_score(pattern, background, data); });
          const double t_global = time_call(
              [&] { (void)global_score(pattern, margins, background, data, config.inference); });
          if (run > 0) {
            if (ok) {
              local_t.seconds.push_back(t_local);
              global_t.seconds.push_back(t_global);
            } else {
              ++local_t.nonconverged;
              ++global_t.nonconverged;
            }
          }
        }
        if (config.time_inference) emit(summarize(mode, n, density, "infer", infer_t));
        if (config.time_scores) {
          emit(summarize(mode, n, density, "global", global_t));
          emit(summarize(mode, n, density, "local", local_t));
        }
      }
    }
  }
  return rows;
}

namespace {

double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCategory::invalid_input, "not a number: '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::vector<double> parse_density_grid(std::string_view text) {
  std::vector<double> out;
  if (auto dots = text.find(".."); dots != std::string_view::npos) {
    const double lo = parse_double(text.substr(0, dots));
    std::string_view rest = text.substr(dots + 2);
    double step = 0.01;
    if (auto colon = rest.find(':'); colon != std::string_view::npos) {
      step = parse_double(rest.substr(colon + 1));
      rest = rest.substr(0, colon);
    }
    const double hi = parse_double(rest);
    if (!(step > 0.0) || hi < lo) {
      throw Error(ErrorCategory::invalid_input, "bad density range '" + std::string(text) + "'");
    }
    const auto steps = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long k = 0; k <= steps; ++k) {
      // Round to suppress accumulation noise such as 0.030000000000000002.
      out.push_back(std::round((lo + k * step) * 1e12) / 1e12);
    }
  } else {
    std::size_t start = 0;
    while (start <= text.size()) {
      auto comma = text.find(',', start);
      if (comma == std::string_view::npos) comma = text.size();
      out.push_back(parse_double(text.substr(start, comma - start)));
      start = comma + 1;
    }
  }
  for (double d : out) {
    if (!(d > 0.0 && d < 1.0)) {
      throw Error(ErrorCategory::invalid_input, "density must lie strictly between 0 and 1");
    }
  }
  return out;
}

}  // namespace tilechain
