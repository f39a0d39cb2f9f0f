#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "tilechain/error.hpp"
#include "tilechain/synth.hpp"

using namespace tilechain;

namespace {

Dataset toy() {
  const std::vector<Record> recs{
      {"d1", "p1", "Person", 1}, {"d1", "l1", "Location", 1}, {"d2", "p1", "Person", 1},
      {"d2", "l1", "Location", 1}, {"d2", "p2", "Person", 1}, {"d3", "p2", "Person", 1},
      {"d3", "l2", "Location", 1}};
  return load_transactions(recs);
}

Index id(const Dataset& d, const std::string& label) { return *d.find_entity(label); }

// Every row holds the same values rotated, so row and column margins agree.
TransactionMatrix circulant(Index n, ValueMode mode) {
  std::vector<double> base(n);
  for (Index k = 0; k < n; ++k) {
    base[k] = mode == ValueMode::binary ? (k % 3 == 0 ? 1.0 : 0.0) : 0.1 + 0.8 * k / n;
  }
  std::vector<Triplet> cells;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double v = base[(j + n - i) % n];
      if (v != 0.0) cells.push_back({i, j, v});
    }
  }
  return TransactionMatrix(n, n, mode, std::move(cells));
}

PatternTiles pattern_of(std::vector<Tile> tiles) {
  PatternTiles p;
  p.source = "p";
  for (auto& t : tiles) {
    t.canonicalize();
    p.tiles.push_back({std::move(t), "t"});
  }
  return p;
}

}  // namespace

TEST_CASE("kind names round trip") {
  CHECK(model_kind_from_string(to_string(ModelKind::real)) == ModelKind::real);
  CHECK(model_kind_from_string(to_string(ModelKind::binary)) == ModelKind::binary);
  CHECK(score_kind_from_string(to_string(ScoreKind::global)) == ScoreKind::global);
  CHECK_THROWS_AS((void)score_kind_from_string("median"), Error);
  CHECK_THROWS_AS((void)model_kind_from_string("ternary"), Error);
}

TEST_CASE("background tiles cover columns, row-domain blocks and domains") {
  const Dataset d = toy();
  const auto bg = build_background(d);
  CHECK(bg.col_tiles.size() == d.matrix.n_cols());
  CHECK(bg.row_tiles.size() == d.matrix.n_rows() * d.domains.size());
  CHECK(bg.dom_tiles.size() == d.domains.size());
  CHECK(bg.all().size() == bg.col_tiles.size() + bg.row_tiles.size() + bg.dom_tiles.size());
  for (const auto& t : bg.all()) CHECK(t.tile.cell_count() > 0);
  // Every cell is covered, so inference is well posed.
  const auto m = infer_model(ModelKind::binary, bg.all(), binarize(d.matrix));
  CHECK(is_converged(m));
}

TEST_CASE("bicluster_to_tiles makes one tile per co-occurring pair") {
  const Dataset d = toy();
  Bicluster b;
  b.id = "r0.b0";
  b.left = {id(d, "p1"), id(d, "p2")};
  b.right = {id(d, "l1"), id(d, "l2")};
  std::sort(b.left.begin(), b.left.end());
  std::sort(b.right.begin(), b.right.end());
  const auto p = bicluster_to_tiles(b, d);
  CHECK(p.source == "r0.b0");
  // p1-l1 (d1, d2), p2-l1 (d2), p2-l2 (d3); p1-l2 never co-occurs.
  REQUIRE(p.tiles.size() == 3);
  CHECK(p.warnings.size() == 1);
  for (const auto& t : p.tiles) {
    CHECK(t.tile.cols.size() == 2);
    for (Index i : t.tile.rows) {
      for (Index j : t.tile.cols) CHECK(d.matrix.value(i, j) != 0.0);
    }
  }
  std::size_t cells = 0;
  for (const auto& t : p.tiles) cells += t.tile.rows.size();
  CHECK(cells == 4);
}

TEST_CASE("chain tiles drop duplicate rectangles") {
  const Dataset d = toy();
  Bicluster b;
  b.id = "x";
  b.left = {id(d, "p1")};
  b.right = {id(d, "l1")};
  const std::vector<const Bicluster*> twice{&b, &b};
  const auto p = chain_to_tiles("x+x", twice, d);
  CHECK(p.tiles.size() == 1);
  CHECK(p.source == "x+x");

  std::vector<NamedTile> into = p.tiles;
  merge_tiles(into, p.tiles);
  CHECK(into.size() == 1);
}

TEST_CASE("bernoulli_kl") {
  CHECK(bernoulli_kl(1.0, 0.5) == doctest::Approx(std::log(2.0)));
  CHECK(bernoulli_kl(0.0, 0.5) == doctest::Approx(std::log(2.0)));
  CHECK(bernoulli_kl(0.3, 0.3) == 0.0);
  CHECK(std::isinf(bernoulli_kl(1.0, 0.0)));
  CHECK(std::isinf(bernoulli_kl(0.5, 1.0)));
  CHECK(bernoulli_kl(1.0, 1.0) == 0.0);
}

TEST_CASE("gaussian_kl closed form") {
  CHECK(gaussian_kl(0.0, 1.0, 1.0, 1.0) == 0.5);
  CHECK(gaussian_kl(0.3, 0.7, 0.3, 0.7) == 0.0);
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> mu(-2.0, 2.0), var(0.2, 3.0);
  for (int t = 0; t < 20; ++t) {
    const double m1 = mu(rng), v1 = var(rng), m2 = mu(rng), v2 = var(rng);
    auto logpdf = [](double x, double m, double v) {
      return -0.5 * std::log(2 * std::numbers::pi * v) - (x - m) * (x - m) / (2 * v);
    };
    const double sd = std::sqrt(v1);
    const double numeric = oracle::simpson(
        [&](double x) { return std::exp(logpdf(x, m1, v1)) * (logpdf(x, m1, v1) - logpdf(x, m2, v2)); },
        m1 - 14 * sd, m1 + 14 * sd, 20000);
    CHECK(std::abs(gaussian_kl(m1, v1, m2, v2) - numeric) <= 1e-6);
  }
}

TEST_CASE("a pattern implied by the background scores zero globally") {
  for (ValueMode mode : {ValueMode::binary, ValueMode::real}) {
    const Index n = 9;
    const auto data = circulant(n, mode);
    const ModelKind kind = mode == ValueMode::binary ? ModelKind::binary : ModelKind::real;
    const auto bg = margin_tiles(n, n);
    const auto back = infer_model(kind, bg, data);
    REQUIRE(is_converged(back));
    std::vector<Index> all(n);
    for (Index j = 0; j < n; ++j) all[j] = j;
    const auto p = pattern_of({Tile{{0, 1}, all}});
    const auto s = global_score(p, bg, back, data);
    CHECK_FALSE(s.infinite);
    CHECK(s.value <= 1e-6);
    CHECK(s.kind == ScoreKind::global);
  }
}

TEST_CASE("one exact cell against a uniform background costs log 2") {
  const TransactionMatrix data(2, 2, ValueMode::binary, {{0, 0, 1}});
  const Model back = BinaryModel(2, 2);
  const auto p = pattern_of({Tile{{0}, {0}}});
  const auto s = global_score(p, {}, back, data);
  CHECK(s.value == doctest::Approx(std::log(2.0)));
  REQUIRE(s.per_tile.size() == 1);
  CHECK(s.per_tile[0] == doctest::Approx(std::log(2.0)));
}

TEST_CASE("local score examples") {
  const TransactionMatrix data(2, 3, ValueMode::binary, {{0, 0, 1}, {0, 1, 1}, {1, 2, 1}});
  const Model uniform = BinaryModel(2, 3);
  const auto p = pattern_of({Tile{{0}, {0, 1}}, Tile{{1}, {2}}});
  const auto s = local_score(p, uniform, data);
  CHECK(s.value == doctest::Approx(3 * std::log(2.0)));
  CHECK(s.kind == ScoreKind::local);
  REQUIRE(s.per_tile.size() == 2);
  CHECK(s.per_tile[0] == doctest::Approx(2 * std::log(2.0)));

  // Overlapping tiles: each cell once with dedup, twice without.
  const auto overlap = pattern_of({Tile{{0}, {0, 1}}, Tile{{0}, {1}}});
  CHECK(local_score(overlap, uniform, data).value == doctest::Approx(3 * std::log(2.0)));
  CHECK(local_score(overlap, uniform, data, true).value == doctest::Approx(2 * std::log(2.0)));

  // Cells pinned to their observed values cost nothing.
  const Model pinned = infer_model(ModelKind::binary, p.tiles, data);
  const auto z = local_score(p, pinned, data);
  CHECK(z.value == 0.0);
  CHECK_FALSE(std::signbit(z.value));

  // A pinned cell contradicting the data is infinitely surprising.
  const TransactionMatrix flipped(2, 3, ValueMode::binary, {{0, 0, 1}, {1, 2, 1}});
  CHECK(local_score(p, pinned, flipped).infinite);
}

TEST_CASE("local score can be negative for concentrated real densities") {
  const Index n = 6;
  std::vector<Triplet> cells;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) cells.push_back({i, j, 0.5 + 0.001 * ((i + j) % 3)});
  }
  const TransactionMatrix data(n, n, ValueMode::real, std::move(cells));
  const auto bg = margin_tiles(n, n);
  const auto back = infer_model(ModelKind::real, bg, data);
  const auto s = local_score(pattern_of({Tile{{0, 1}, {0, 1}}}), back, data);
  CHECK(s.value < 0.0);
}

TEST_CASE("global score is nonnegative on random patterns") {
  std::mt19937_64 rng(67);
  for (int t = 0; t < 15; ++t) {
    for (ModelKind kind : {ModelKind::binary, ModelKind::real}) {
      const auto data = kind == ModelKind::binary ? oracle::random_binary(rng, 10, 10, 0.4)
                                                  : oracle::random_real(rng, 10, 10, 1.0);
      const auto bg = margin_tiles(10, 10);
      const auto back = infer_model(kind, bg, data);
      std::vector<Tile> tiles;
      for (const auto& nt : random_tiles(10, 10, 2, 3, 3, 300 + t)) tiles.push_back(nt.tile);
      const auto s = global_score(pattern_of(tiles), bg, back, data);
      CHECK(s.value >= 0.0);
      for (double v : s.per_tile) CHECK(v >= -1e-12);
    }
  }
}

TEST_CASE("a pattern folded into the background stops scoring") {
  std::mt19937_64 rng(71);
  for (int t = 0; t < 10; ++t) {
    const auto data = oracle::random_binary(rng, 12, 12, 0.3);
    // A block of ones makes every pattern tile exact.
    std::vector<Triplet> cells = data.triplets();
    for (Index i = 2; i < 5; ++i) {
      for (Index j = 3; j < 7; ++j) cells.push_back({i, j, 1.0});
    }
    TransactionMatrix patched(12, 12, ValueMode::binary, {});
    {
      std::set<std::pair<Index, Index>> seen;
      std::vector<Triplet> unique;
      for (const auto& c : cells) {
        if (seen.emplace(c.row, c.col).second) unique.push_back({c.row, c.col, 1.0});
      }
      patched = TransactionMatrix(12, 12, ValueMode::binary, std::move(unique));
    }
    auto bg = margin_tiles(12, 12);
    const auto p = pattern_of({Tile{{2, 3, 4}, {3, 4, 5, 6}}});
    const auto before = infer_model(ModelKind::binary, bg, patched);
    CHECK(local_score(p, before, patched).value > 0.0);
    merge_tiles(bg, p.tiles);
    const auto after = infer_model(ModelKind::binary, bg, patched, {}, &before);
    CHECK(local_score(p, after, patched).value == 0.0);
    CHECK(global_score(p, bg, after, patched).value <= 1e-6);
  }
}
