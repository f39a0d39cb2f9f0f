#pragma once

#include <span>
#include <string>
#include <vector>

#include "tilechain/schema.hpp"

namespace tilechain {

/// (E_i, E_j) over one relation: every cross pair is in the relation.
/// Both sides hold ascending column indices.
struct Bicluster {
  std::string id;
  RelationId relation = 0;
  std::vector<Index> left;
  std::vector<Index> right;

  friend bool operator==(const Bicluster&, const Bicluster&) = default;
};

/// |a ∩ b| / |a ∪ b| over sorted sets; 0 when both are empty.
double jaccard(std::span<const Index> a, std::span<const Index> b);

/// Enumerates every closed bicluster of the relation whose left side (the
/// transaction side) has at least `min_support` entities. Ids are
/// "r<relation>.b<k>" with k ordered by (left, right) lexicographically.
std::vector<Bicluster> mine_closed_biclusters(const Relation& relation, std::size_t min_support);

/// Mines every relation of the schema, concatenated in relation order.
std::vector<Bicluster> mine_schema(const Schema& schema, std::size_t min_support);

/// Galois closure starting from the right side: left' = entities related to
/// all of `right`, right' = entities related to all of left'. A closed
/// bicluster maps to itself.
Bicluster closure(const Relation& relation, const Bicluster& bicluster);

bool is_closed(const Relation& relation, const Bicluster& bicluster);

}  // namespace tilechain
