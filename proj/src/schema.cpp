#include "tilechain/schema.hpp"

#include <algorithm>

#include "tilechain/error.hpp"

namespace tilechain {

bool Relation::contains(Index left, Index right) const {
  return std::binary_search(pairs.begin(), pairs.end(), std::pair{left, right});
}

Schema extract_relations(const Dataset& dataset, std::span<const std::string> domain_order) {
  if (domain_order.size() < 2) {
    throw Error(ErrorCategory::invalid_input, "domain order needs at least two domains");
  }
  Schema schema;
  for (const auto& name : domain_order) {
    auto id = dataset.find_domain(name);
    if (!id) throw Error(ErrorCategory::unknown_domain, "domain '" + name + "' not found in data");
    if (std::find(schema.domain_order.begin(), schema.domain_order.end(), *id) !=
        schema.domain_order.end()) {
      throw Error(ErrorCategory::invalid_input, "domain '" + name + "' listed twice");
    }
    schema.domain_order.push_back(*id);
  }

  const auto& m = dataset.matrix;
  for (std::size_t k = 0; k + 1 < schema.domain_order.size(); ++k) {
    Relation rel;
    rel.id = static_cast<RelationId>(k);
    rel.left_domain = schema.domain_order[k];
    rel.right_domain = schema.domain_order[k + 1];
    rel.name = dataset.domains[rel.left_domain].name + "-" + dataset.domains[rel.right_domain].name;

    std::vector<Index> left, right;
    for (Index i = 0; i < m.n_rows(); ++i) {
      left.clear();
      right.clear();
      for (const auto& e : m.row(i)) {
        const DomainId d = dataset.entity_domain[e.col];
        if (d == rel.left_domain) left.push_back(e.col);
        else if (d == rel.right_domain) right.push_back(e.col);
      }
      for (Index a : left) {
        for (Index b : right) rel.pairs.emplace_back(a, b);
      }
    }
    std::sort(rel.pairs.begin(), rel.pairs.end());
    rel.pairs.erase(std::unique(rel.pairs.begin(), rel.pairs.end()), rel.pairs.end());
    schema.relations.push_back(std::move(rel));
  }
  return schema;
}

}  // namespace tilechain
