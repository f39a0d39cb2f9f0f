#include "tilechain/explorer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tilechain/error.hpp"

namespace tilechain {

namespace {

// Adds slack so thresholds such as 0.1 accept a Jaccard of exactly 1/10.
constexpr double kJaccardSlack = 1e-12;

}  // namespace

std::string BiclusterChain::id() const {
  std::string out;
  for (const auto& m : members) {
    if (!out.empty()) out += '+';
    out += m;
  }
  return out;
}

std::optional<std::span<const Index>> side_in_domain(const Bicluster& bicluster, DomainId domain,
                                                     const Schema& schema) {
  if (bicluster.relation >= schema.relations.size()) return std::nullopt;
  const auto& rel = schema.relations[bicluster.relation];
  if (rel.left_domain == domain) return std::span<const Index>(bicluster.left);
  if (rel.right_domain == domain) return std::span<const Index>(bicluster.right);
  return std::nullopt;
}

bool is_redescription(const Bicluster& a, const Bicluster& b, DomainId domain, double threshold,
                      const Schema& schema) {
  auto sa = side_in_domain(a, domain, schema);
  auto sb = side_in_domain(b, domain, schema);
  if (!sa || !sb) return false;
  return jaccard(*sa, *sb) + kJaccardSlack >= threshold;
}

namespace {

// All maximal one-directional extensions from `from`, stepping through
// relations in direction `step` (+1 right, -1 left). Each path lists
// biclusters in order of distance from the seed.
void extend(const Schema& schema, const std::vector<std::vector<const Bicluster*>>& by_relation,
            const Bicluster& from, int step, double threshold,
            std::vector<const Bicluster*>& path, std::vector<std::vector<const Bicluster*>>& out) {
  const long next_rel = static_cast<long>(from.relation) + step;
  bool extended = false;
  if (next_rel >= 0 && next_rel < static_cast<long>(schema.relations.size())) {
    const DomainId shared = step > 0 ? schema.relations[from.relation].right_domain
                                     : schema.relations[from.relation].left_domain;
    for (const Bicluster* next : by_relation[static_cast<std::size_t>(next_rel)]) {
      if (!is_redescription(from, *next, shared, threshold, schema)) continue;
      extended = true;
      path.push_back(next);
      extend(schema, by_relation, *next, step, threshold, path, out);
      path.pop_back();
    }
  }
  if (!extended) out.push_back(path);
}

}  // namespace

std::vector<BiclusterChain> search_chains(const Schema& schema, std::span<const Bicluster> biclusters,
                                          const Bicluster& seed, double threshold) {
  std::vector<std::vector<const Bicluster*>> by_relation(schema.relations.size());
  for (const auto& b : biclusters) {
    if (b.relation < by_relation.size()) by_relation[b.relation].push_back(&b);
  }

  std::vector<const Bicluster*> path;
  std::vector<std::vector<const Bicluster*>> left, right;
  extend(schema, by_relation, seed, -1, threshold, path, left);
  extend(schema, by_relation, seed, +1, threshold, path, right);

  std::vector<BiclusterChain> chains;
  chains.reserve(left.size() * right.size());
  for (const auto& l : left) {
    for (const auto& r : right) {
      std::vector<const Bicluster*> members(l.rbegin(), l.rend());
      members.push_back(&seed);
      members.insert(members.end(), r.begin(), r.end());

      BiclusterChain chain;
      for (std::size_t k = 0; k < members.size(); ++k) {
        chain.members.push_back(members[k]->id);
        if (k + 1 < members.size()) {
          chain.shared_domains.push_back(schema.relations[members[k]->relation].right_domain);
        }
      }
      chains.push_back(std::move(chain));
    }
  }
  return chains;
}

std::vector<double> opacities(std::span<const double> scores) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double s : scores) {
    if (std::isinf(s)) continue;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  std::vector<double> out;
  out.reserve(scores.size());
  for (double s : scores) {
    if (std::isinf(s) || !(hi > lo)) out.push_back(1.0);
    else out.push_back((s - lo) / (hi - lo));
  }
  return out;
}

bool chain_rank_less(const BiclusterChain& a, const ScoreReport& sa, const BiclusterChain& b,
                     const ScoreReport& sb) {
  if (sa.value != sb.value) return sa.value > sb.value;
  if (a.members.size() != b.members.size()) return a.members.size() < b.members.size();
  return a.members < b.members;
}

Session::Session(Dataset dataset, SessionConfig config, std::map<std::string, std::string> documents)
    : dataset_(std::move(dataset)), config_(std::move(config)), documents_(std::move(documents)) {
  if (config_.domain_order.empty()) {
    for (const auto& d : dataset_.domains) config_.domain_order.push_back(d.name);
  }
  data_ = config_.model == ModelKind::binary ? binarize(dataset_.matrix)
                                             : normalize(dataset_.matrix);
  schema_ = extract_relations(dataset_, config_.domain_order);
  biclusters_ = mine_schema(schema_, config_.min_support);
  for (std::size_t k = 0; k < biclusters_.size(); ++k) by_id_.emplace(biclusters_[k].id, k);
  background_ = build_background(dataset_).all();
  model_ = infer_model(config_.model, background_, data_, config_.inference);
}

std::vector<NamedTile> Session::constraint_tiles() const {
  std::vector<NamedTile> tiles = background_;
  merge_tiles(tiles, known_);
  return tiles;
}

const Bicluster& Session::bicluster(std::string_view id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    throw Error(ErrorCategory::not_found, "unknown bicluster '" + std::string(id) + "'");
  }
  return biclusters_[it->second];
}

ScoreReport Session::score(const PatternTiles& pattern, std::optional<ScoreKind> kind) const {
  if (kind.value_or(config_.score) == ScoreKind::global) {
    return global_score(pattern, constraint_tiles(), model_, data_, config_.inference);
  }
  return local_score(pattern, model_, data_, config_.dedup_local_cells);
}

std::vector<BiclusterChain> Session::full_path_search(std::string_view seed) const {
  return search_chains(schema_, biclusters_, bicluster(seed), config_.jaccard);
}

ChainEvaluation Session::full_path_evaluate(std::string_view seed,
                                            std::optional<ScoreKind> kind) const {
  ChainEvaluation eval;
  for (auto& chain : full_path_search(seed)) {
    std::vector<const Bicluster*> members;
    for (const auto& id : chain.members) members.push_back(&bicluster(id));
    try {
      auto tiles = chain_to_tiles(chain.id(), members, dataset_);
      auto report = score(tiles, kind);
      eval.ranked.push_back({std::move(chain), std::move(report)});
    } catch (const Error& e) {
      eval.warnings.push_back("chain '" + chain.id() + "' skipped: " + e.what());
    }
  }
  std::sort(eval.ranked.begin(), eval.ranked.end(), [](const RankedChain& a, const RankedChain& b) {
    return chain_rank_less(a.chain, a.score, b.chain, b.score);
  });
  return eval;
}

std::vector<Neighbor> Session::stepwise_evaluate(std::string_view seed_id,
                                                 std::optional<ScoreKind> kind,
                                                 std::optional<double> threshold) const {
  const Bicluster& seed = bicluster(seed_id);
  const double phi = threshold.value_or(config_.jaccard);
  const auto& seed_rel = schema_.relations[seed.relation];

  std::vector<Neighbor> out;
  for (const auto& other : biclusters_) {
    if (other.id == seed.id) continue;
    double best = -1.0;
    for (DomainId d : {seed_rel.left_domain, seed_rel.right_domain}) {
      auto sa = side_in_domain(seed, d, schema_);
      auto sb = side_in_domain(other, d, schema_);
      if (sa && sb) best = std::max(best, jaccard(*sa, *sb));
    }
    if (best < 0.0 || best + kJaccardSlack < phi) continue;
    Neighbor n;
    n.bicluster_id = other.id;
    n.jaccard = best;
    n.same_relation = other.relation == seed.relation;
    n.score = score(bicluster_to_tiles(other, dataset_), kind);
    out.push_back(std::move(n));
  }

  std::vector<double> scores;
  for (const auto& n : out) scores.push_back(n.score.value);
  const auto alpha = opacities(scores);
  for (std::size_t k = 0; k < out.size(); ++k) out[k].opacity = alpha[k];
  std::stable_sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.score.value != b.score.value) return a.score.value > b.score.value;
    return a.bicluster_id < b.bicluster_id;
  });
  return out;
}

bool Session::mark_known(std::span<const std::string> bicluster_ids) {
  std::vector<NamedTile> added = known_;
  for (const auto& id : bicluster_ids) {
    auto tiles = bicluster_to_tiles(bicluster(id), dataset_);
    merge_tiles(added, tiles.tiles);
  }
  if (added.size() == known_.size()) return false;

  std::vector<NamedTile> tiles = background_;
  merge_tiles(tiles, added);
  // Strong guarantee: nothing is assigned until inference has succeeded.
  Model updated = infer_model(config_.model, tiles, data_, config_.inference, &model_);
  known_ = std::move(added);
  model_ = std::move(updated);
  return true;
}

std::vector<DocumentHit> Session::documents_for_pattern(
    std::span<const Bicluster* const> members) const {
  const auto& m = dataset_.matrix;
  std::set<Index> rows;
  std::set<Index> entities;
  for (const Bicluster* b : members) {
    entities.insert(b->left.begin(), b->left.end());
    entities.insert(b->right.begin(), b->right.end());
    for (Index ei : b->left) {
      for (Index ej : b->right) {
        for (const auto& e : m.column(ei)) {
          if (m.contains(e.row, ej)) rows.insert(e.row);
        }
      }
    }
  }
  std::vector<DocumentHit> out;
  for (Index r : rows) {
    DocumentHit hit;
    hit.doc_id = dataset_.doc_ids[r];
    for (const auto& e : m.row(r)) {
      if (entities.count(e.col)) hit.entities.push_back(dataset_.entity_labels[e.col]);
    }
    if (auto it = documents_.find(hit.doc_id); it != documents_.end()) hit.content = it->second;
    out.push_back(std::move(hit));
  }
  return out;
}

std::vector<DocumentHit> Session::documents_for(std::string_view bicluster_id) const {
  const Bicluster* b = &bicluster(bicluster_id);
  return documents_for_pattern(std::span<const Bicluster* const>(&b, 1));
}

std::vector<DocumentHit> Session::documents_for_chain(std::span<const std::string> members) const {
  std::vector<const Bicluster*> bs;
  for (const auto& id : members) bs.push_back(&bicluster(id));
  return documents_for_pattern(bs);
}

std::optional<DocumentHit> Session::document(std::string_view doc_id) const {
  auto row = dataset_.find_doc(doc_id);
  if (!row) return std::nullopt;
  DocumentHit hit;
  hit.doc_id = std::string(doc_id);
  for (const auto& e : dataset_.matrix.row(*row)) hit.entities.push_back(dataset_.entity_labels[e.col]);
  if (auto it = documents_.find(hit.doc_id); it != documents_.end()) hit.content = it->second;
  return hit;
}

}  // namespace tilechain
