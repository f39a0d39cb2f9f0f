#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "tilechain/error.hpp"
#include "tilechain/json_io.hpp"
#include "tilechain/synth.hpp"

using namespace tilechain;

TEST_CASE("synthetic density stays within three standard deviations") {
  for (double beta : {0.01, 0.03, 0.05}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto r = generate({200, 200, beta, ModelKind::binary, seed});
      const double cells = 200.0 * 200.0;
      const double sd = std::sqrt(cells * beta * (1 - beta));
      CHECK(std::abs(static_cast<double>(r.nonzeros_before_patch) - cells * beta) <= 3 * sd);
    }
  }
}

TEST_CASE("every synthetic row and column is non-empty") {
  for (ModelKind mode : {ModelKind::binary, ModelKind::real}) {
    const auto r = generate({150, 120, 0.005, mode, 9});
    CHECK(r.patched_rows + r.patched_cols > 0);
    CHECK(r.matrix.nonzeros() >= r.nonzeros_before_patch);
    for (Index i = 0; i < r.matrix.n_rows(); ++i) CHECK_FALSE(r.matrix.row(i).empty());
    for (Index j = 0; j < r.matrix.n_cols(); ++j) CHECK_FALSE(r.matrix.column(j).empty());
    for (const auto& t : r.matrix.triplets()) {
      if (mode == ModelKind::binary) CHECK(t.value == 1.0);
      else CHECK((t.value > 0.0 && t.value < 1.0));
    }
  }
}

TEST_CASE("generation is deterministic per seed") {
  const SynthSpec spec{60, 70, 0.1, ModelKind::real, 5};
  CHECK(generate(spec).matrix == generate(spec).matrix);
  SynthSpec other = spec;
  other.seed = 6;
  CHECK_FALSE(generate(spec).matrix == generate(other).matrix);
  CHECK_THROWS_AS((void)generate({10, 10, 0.0, ModelKind::binary, 1}), Error);
  CHECK_THROWS_AS((void)generate({10, 10, 1.0, ModelKind::binary, 1}), Error);
}

TEST_CASE("random tiles have the requested shape") {
  const auto tiles = random_tiles(30, 40, 12, 5, 4, 3);
  REQUIRE(tiles.size() == 12);
  for (const auto& t : tiles) {
    CHECK(t.tile.rows.size() == 5);
    CHECK(t.tile.cols.size() == 4);
    CHECK(std::is_sorted(t.tile.rows.begin(), t.tile.rows.end()));
    CHECK(t.tile.rows.back() < 30);
    CHECK(t.tile.cols.back() < 40);
  }
  CHECK(random_tiles(30, 40, 12, 5, 4, 3) == tiles);
}

TEST_CASE("density grid parsing") {
  CHECK(parse_density_grid("0.01,0.03") == std::vector<double>{0.01, 0.03});
  CHECK(parse_density_grid("0.01..0.05") == std::vector<double>{0.01, 0.02, 0.03, 0.04, 0.05});
  CHECK(parse_density_grid("0.01..0.05:0.02") == std::vector<double>{0.01, 0.03, 0.05});
  CHECK_THROWS_AS((void)parse_density_grid("abc"), Error);
  CHECK_THROWS_AS((void)parse_density_grid("0.5..0.1"), Error);
  CHECK_THROWS_AS((void)parse_density_grid("1.5"), Error);
}

TEST_CASE("benchmark CSV has one row per mode, size, density and phase") {
  BenchConfig cfg;
  cfg.sizes = {20, 30};
  cfg.densities = {0.1, 0.2};
  cfg.reps = 1;
  cfg.tile_count = 3;
  cfg.tile_size = 3;
  std::ostringstream csv;
  const auto rows = run_benchmark(cfg, &csv);
  CHECK(rows.size() == 2 * 2 * 2 * 3);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "mode,N,M,beta,phase,mean_seconds,std_seconds,runs,nonconverged");
  std::size_t count = 0;
  while (std::getline(in, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 8);
    ++count;
  }
  CHECK(count == rows.size());
  for (const auto& r : rows) {
    CHECK(r.mean_seconds >= 0.0);
    CHECK(r.runs + r.nonconverged == 1);
  }
}

TEST_CASE("binary models survive a JSON round trip") {
  std::mt19937_64 rng(83);
  const auto data = oracle::random_binary(rng, 8, 9, 0.3);
  auto tiles = binary_targets(margin_tiles(8, 9), data);
  tiles.push_back({Tile{{0}, {0}}, 1.0, "exact"});
  const Model m = infer_binary(tiles, 8, 9);
  const Model back = model_from_json(Json::parse(dump(to_json(m))));
  const auto& a = std::get<BinaryModel>(m);
  const auto& b = std::get<BinaryModel>(back);
  CHECK(std::ranges::equal(a.probabilities(), b.probabilities()));
  CHECK(b.pinned(0, 0));
  CHECK(a.converged() == b.converged());
  CHECK(a.sweeps() == b.sweeps());
}

TEST_CASE("real models survive a JSON round trip") {
  std::mt19937_64 rng(89);
  const auto data = oracle::random_real(rng, 7, 6, 0.8);
  const Model m = infer_model(ModelKind::real, margin_tiles(7, 6), data);
  const Model back = model_from_json(Json::parse(dump(to_json(m))));
  const auto& a = std::get<RealModel>(m);
  const auto& b = std::get<RealModel>(back);
  CHECK(a.lambda_m() == b.lambda_m());
  CHECK(a.lambda_v() == b.lambda_v());
  for (Index i = 0; i < 7; ++i) {
    for (Index j = 0; j < 6; ++j) {
      CHECK(a.mean(i, j) == b.mean(i, j));
      CHECK(a.variance(i, j) == b.variance(i, j));
      CHECK(a.pinned(i, j) == b.pinned(i, j));
    }
  }
}

TEST_CASE("score reports encode infinity as null") {
  ScoreReport r;
  r.pattern_id = "x";
  r.infinite = true;
  r.value = std::numeric_limits<double>::infinity();
  const Json j = to_json(r);
  CHECK(j["value"].is_null());
  CHECK(j["infinite"] == true);
  const Json t = to_json(Tile{{1, 2}, {3}});
  CHECK(tile_from_json(t) == Tile{{1, 2}, {3}});
}
