#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tilechain/error.hpp"

using namespace tilechain;

namespace {

Dataset toy() {
  const std::vector<Record> recs{
      {"d1", "p1", "Person", 1}, {"d1", "l1", "Location", 1}, {"d2", "p2", "Person", 1},
      {"d2", "l2", "Location", 1}, {"d2", "t1", "Date", 1},   {"d3", "l1", "Location", 1},
      {"d3", "t1", "Date", 1}};
  return load_transactions(recs);
}

// Relation from an explicit list of rows over left entities 0.. and right
// entities offset by 100.
Relation relation_from_rows(const std::vector<std::vector<Index>>& rows) {
  Relation r;
  r.left_domain = 0;
  r.right_domain = 1;
  r.name = "L-R";
  for (Index i = 0; i < rows.size(); ++i) {
    for (Index j : rows[i]) r.pairs.emplace_back(i, 100 + j);
  }
  std::sort(r.pairs.begin(), r.pairs.end());
  return r;
}

std::set<oracle::Rect> as_set(const std::vector<Bicluster>& bs) {
  std::set<oracle::Rect> out;
  for (const auto& b : bs) out.insert({b.left, b.right});
  return out;
}

}  // namespace

TEST_CASE("extract_relations follows row co-occurrence") {
  const Dataset d = toy();
  const std::vector<std::string> order{"Person", "Location", "Date"};
  const Schema s = extract_relations(d, order);
  REQUIRE(s.relations.size() == 2);
  CHECK(s.relations[0].name == "Person-Location");
  CHECK(s.relations[1].name == "Location-Date");
  const Index p1 = *d.find_entity("p1"), p2 = *d.find_entity("p2");
  const Index l1 = *d.find_entity("l1"), l2 = *d.find_entity("l2");
  CHECK(s.relations[0].contains(p1, l1));
  CHECK_FALSE(s.relations[0].contains(p1, l2));
  CHECK(s.relations[0].contains(p2, l2));
}

TEST_CASE("extract_relations rejects bad domain orders") {
  const Dataset d = toy();
  const std::vector<std::string> unknown{"Person", "Weapon"};
  CHECK_THROWS_AS((void)extract_relations(d, unknown), Error);
  try {
    (void)extract_relations(d, unknown);
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::unknown_domain);
  }
  const std::vector<std::string> single{"Person"};
  CHECK_THROWS_AS((void)extract_relations(d, single), Error);
}

TEST_CASE("extract_relations matches a brute-force double loop") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    const Dataset d = oracle::random_dataset(rng, 20, 3, 6, 0.2);
    std::vector<std::string> order;
    for (const auto& dom : d.domains) order.push_back(dom.name);
    if (order.size() < 2) continue;
    const Schema s = extract_relations(d, order);
    for (const auto& r : s.relations) {
      const std::set<std::pair<Index, Index>> got(r.pairs.begin(), r.pairs.end());
      CHECK(got == oracle::cooccurring_pairs(d, r.left_domain, r.right_domain));
    }
  }
}

TEST_CASE("jaccard") {
  const std::vector<Index> ab{1, 2}, bc{2, 3}, cd{3, 4}, none;
  CHECK(jaccard(ab, bc) == doctest::Approx(1.0 / 3.0));
  CHECK(jaccard(ab, ab) == 1.0);
  CHECK(jaccard(ab, cd) == 0.0);
  CHECK(jaccard(none, none) == 0.0);
}

TEST_CASE("closed biclusters of a small relation") {
  // rows a:{x,y}, b:{x,y}, c:{x}
  const Relation r = relation_from_rows({{0, 1}, {0, 1}, {0}});
  const auto got = as_set(mine_closed_biclusters(r, 2));
  const std::set<oracle::Rect> want{{{0, 1, 2}, {100}}, {{0, 1}, {100, 101}}};
  CHECK(got == want);
}

TEST_CASE("an all-ones relation has a single closed bicluster") {
  const Relation r = relation_from_rows({{0, 1, 2}, {0, 1, 2}, {0, 1, 2}});
  const auto bs = mine_closed_biclusters(r, 1);
  REQUIRE(bs.size() == 1);
  CHECK(bs[0].left == std::vector<Index>{0, 1, 2});
  CHECK(bs[0].right == std::vector<Index>{100, 101, 102});
}

TEST_CASE("an empty relation mines nothing") {
  CHECK(mine_closed_biclusters(Relation{}, 1).empty());
}

TEST_CASE("mined biclusters are closed, cross-complete and support-bounded") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 40; ++t) {
    std::bernoulli_distribution coin(0.4);
    std::vector<std::vector<Index>> rows(10);
    for (auto& row : rows) {
      for (Index j = 0; j < 8; ++j) {
        if (coin(rng)) row.push_back(j);
      }
    }
    const Relation r = relation_from_rows(rows);
    const std::size_t support = 1 + t % 4;
    for (const auto& b : mine_closed_biclusters(r, support)) {
      CHECK(closure(r, b).left == b.left);
      CHECK(closure(r, b).right == b.right);
      CHECK(is_closed(r, b));
      CHECK(b.left.size() >= support);
      CHECK_FALSE(b.right.empty());
      for (Index l : b.left) {
        for (Index x : b.right) CHECK(r.contains(l, x));
      }
    }
  }
}

TEST_CASE("miner equals brute-force closed enumeration") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 60; ++t) {
    std::uniform_int_distribution<int> n_rows(1, 14), n_items(1, 12);
    std::uniform_real_distribution<double> dens(0.15, 0.8);
    const int nr = n_rows(rng), ni = n_items(rng);
    std::bernoulli_distribution coin(dens(rng));
    std::vector<std::vector<Index>> rows(nr);
    for (auto& row : rows) {
      for (int j = 0; j < ni; ++j) {
        if (coin(rng)) row.push_back(static_cast<Index>(j));
      }
    }
    const Relation r = relation_from_rows(rows);
    const std::size_t support = 1 + t % 3;
    CHECK(as_set(mine_closed_biclusters(r, support)) == oracle::closed_biclusters(r, support));
  }
}

TEST_CASE("raising min_support never adds biclusters") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 20; ++t) {
    std::bernoulli_distribution coin(0.5);
    std::vector<std::vector<Index>> rows(12);
    for (auto& row : rows) {
      for (Index j = 0; j < 9; ++j) {
        if (coin(rng)) row.push_back(j);
      }
    }
    const Relation r = relation_from_rows(rows);
    auto prev = as_set(mine_closed_biclusters(r, 1));
    for (std::size_t s = 2; s <= 6; ++s) {
      const auto cur = as_set(mine_closed_biclusters(r, s));
      CHECK(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
      prev = cur;
    }
  }
}

TEST_CASE("bicluster ids are deterministic and ordered") {
  const Relation r = relation_from_rows({{0, 1}, {0, 1}, {0}, {2}});
  const auto a = mine_closed_biclusters(r, 1);
  const auto b = mine_closed_biclusters(r, 1);
  CHECK(a == b);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].id == "r0.b" + std::to_string(k));
    if (k > 0) CHECK(std::tie(a[k - 1].left, a[k - 1].right) < std::tie(a[k].left, a[k].right));
  }
}
