#include "tilechain/miner.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>

namespace tilechain {

double jaccard(std::span<const Index> a, std::span<const Index> b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t i = 0, j = 0, common = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (b[j] < a[i]) ++j;
    else {
      ++common;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

namespace {

class Bitset {
 public:
  explicit Bitset(std::size_t bits = 0) : words_((bits + 63) / 64, 0) {}

  void set(std::size_t k) { words_[k / 64] |= std::uint64_t{1} << (k % 64); }
  bool test(std::size_t k) const { return (words_[k / 64] >> (k % 64)) & 1u; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  Bitset operator&(const Bitset& other) const {
    Bitset out = *this;
    for (std::size_t k = 0; k < words_.size(); ++k) out.words_[k] &= other.words_[k];
    return out;
  }

  bool subset_of(const Bitset& other) const {
    for (std::size_t k = 0; k < words_.size(); ++k) {
      if ((words_[k] & ~other.words_[k]) != 0) return false;
    }
    return true;
  }

 private:
  std::vector<std::uint64_t> words_;
};

// Closed itemset enumeration by prefix-preserving closure extension.
// Transactions are the relation's left entities, items its right entities.
class ClosedEnumerator {
 public:
  ClosedEnumerator(const Relation& relation, std::size_t min_support)
      : min_support_(min_support) {
    for (const auto& [l, r] : relation.pairs) {
      left_.push_back(l);
      right_.push_back(r);
    }
    std::sort(left_.begin(), left_.end());
    left_.erase(std::unique(left_.begin(), left_.end()), left_.end());
    std::sort(right_.begin(), right_.end());
    right_.erase(std::unique(right_.begin(), right_.end()), right_.end());

    tids_.assign(right_.size(), Bitset(left_.size()));
    for (const auto& [l, r] : relation.pairs) {
      const auto t = std::lower_bound(left_.begin(), left_.end(), l) - left_.begin();
      const auto item = std::lower_bound(right_.begin(), right_.end(), r) - right_.begin();
      tids_[item].set(static_cast<std::size_t>(t));
    }
  }

  template <typename Emit>
  void run(Emit&& emit) {
    if (left_.empty() || left_.size() < min_support_) return;
    Bitset all(left_.size());
    for (std::size_t t = 0; t < left_.size(); ++t) all.set(t);
    auto items = closure_of(all);
    if (!items.empty()) emit(all, items);
    expand(items, all, -1, emit);
  }

  Index left_entity(std::size_t t) const { return left_[t]; }
  Index right_entity(std::size_t item) const { return right_[item]; }
  std::size_t n_left() const { return left_.size(); }

 private:
  std::vector<std::size_t> closure_of(const Bitset& tidset) const {
    std::vector<std::size_t> items;
    for (std::size_t f = 0; f < tids_.size(); ++f) {
      if (tidset.subset_of(tids_[f])) items.push_back(f);
    }
    return items;
  }

  template <typename Emit>
  void expand(const std::vector<std::size_t>& itemset, const Bitset& tidset, long core,
              Emit& emit) {
    for (std::size_t e = static_cast<std::size_t>(core + 1); e < tids_.size(); ++e) {
      if (std::binary_search(itemset.begin(), itemset.end(), e)) continue;
      Bitset next_tids = tidset & tids_[e];
      if (next_tids.count() < min_support_) continue;
      auto next = closure_of(next_tids);
      // Prefix preservation: the closure must not add any item below e.
      bool preserved = true;
      auto it_p = itemset.begin();
      for (std::size_t f : next) {
        if (f >= e) break;
        while (it_p != itemset.end() && *it_p < f) ++it_p;
        if (it_p == itemset.end() || *it_p != f) {
          preserved = false;
          break;
        }
      }
      if (!preserved) continue;
      emit(next_tids, next);
      expand(next, next_tids, static_cast<long>(e), emit);
    }
  }

  std::size_t min_support_;
  std::vector<Index> left_;
  std::vector<Index> right_;
  std::vector<Bitset> tids_;
};

std::vector<Index> related_to_all_right(const Relation& relation, std::span<const Index> right) {
  std::vector<Index> candidates;
  for (const auto& [l, r] : relation.pairs) candidates.push_back(l);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::vector<Index> out;
  for (Index l : candidates) {
    if (std::all_of(right.begin(), right.end(), [&](Index r) { return relation.contains(l, r); })) {
      out.push_back(l);
    }
  }
  return out;
}

std::vector<Index> related_to_all_left(const Relation& relation, std::span<const Index> left) {
  std::vector<Index> candidates;
  for (const auto& [l, r] : relation.pairs) candidates.push_back(r);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::vector<Index> out;
  for (Index r : candidates) {
    if (std::all_of(left.begin(), left.end(), [&](Index l) { return relation.contains(l, r); })) {
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace

std::vector<Bicluster> mine_closed_biclusters(const Relation& relation, std::size_t min_support) {
  min_support = std::max<std::size_t>(min_support, 1);
  std::vector<Bicluster> out;
  ClosedEnumerator enumerator(relation, min_support);
  enumerator.run([&](const Bitset& tids, const std::vector<std::size_t>& items) {
    Bicluster b;
    b.relation = relation.id;
    for (std::size_t t = 0; t < enumerator.n_left(); ++t) {
      if (tids.test(t)) b.left.push_back(enumerator.left_entity(t));
    }
    for (std::size_t f : items) b.right.push_back(enumerator.right_entity(f));
    out.push_back(std::move(b));
  });

  std::sort(out.begin(), out.end(), [](const Bicluster& a, const Bicluster& b) {
    return a.left != b.left ? a.left < b.left : a.right < b.right;
  });
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].id = "r" + std::to_string(relation.id) + ".b" + std::to_string(k);
  }
  return out;
}

std::vector<Bicluster> mine_schema(const Schema& schema, std::size_t min_support) {
  std::vector<Bicluster> all;
  for (const auto& rel : schema.relations) {
    auto mined = mine_closed_biclusters(rel, min_support);
    all.insert(all.end(), std::make_move_iterator(mined.begin()),
               std::make_move_iterator(mined.end()));
  }
  return all;
}

Bicluster closure(const Relation& relation, const Bicluster& bicluster) {
  Bicluster out = bicluster;
  out.left = related_to_all_right(relation, bicluster.right);
  out.right = related_to_all_left(relation, out.left);
  return out;
}

bool is_closed(const Relation& relation, const Bicluster& bicluster) {
  auto c = closure(relation, bicluster);
  return c.left == bicluster.left && c.right == bicluster.right;
}

}  // namespace tilechain
