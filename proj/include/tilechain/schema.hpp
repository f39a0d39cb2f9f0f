#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tilechain/matrix.hpp"

namespace tilechain {

using RelationId = std::uint32_t;

/// Co-occurrence relation between two entity domains: (e, f) is a pair when
/// e and f share at least one row.
struct Relation {
  RelationId id = 0;
  DomainId left_domain = 0;
  DomainId right_domain = 0;
  std::string name;  // "<left>-<right>"
  std::vector<std::pair<Index, Index>> pairs;  // sorted, unique

  bool contains(Index left, Index right) const;
};

/// Linear multi-relational schema: relation k joins domain_order[k] and
/// domain_order[k + 1].
struct Schema {
  std::vector<DomainId> domain_order;
  std::vector<Relation> relations;
};

Schema extract_relations(const Dataset& dataset, std::span<const std::string> domain_order);

}  // namespace tilechain
