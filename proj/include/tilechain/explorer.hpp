#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tilechain/miner.hpp"
#include "tilechain/scoring.hpp"

namespace tilechain {

/// Ordered biclusters over consecutive relations; members[k] and
/// members[k + 1] are linked through shared_domains[k].
struct BiclusterChain {
  std::vector<std::string> members;
  std::vector<DomainId> shared_domains;

  std::string id() const;  // member ids joined with '+'
  friend bool operator==(const BiclusterChain&, const BiclusterChain&) = default;
};

/// The entity set a bicluster has in `domain`, if its relation touches it.
std::optional<std::span<const Index>> side_in_domain(const Bicluster& bicluster, DomainId domain,
                                                     const Schema& schema);

/// Jaccard of the two domain-`domain` sides is at least `threshold`.
/// Biclusters without a side in that domain are never redescriptions.
bool is_redescription(const Bicluster& a, const Bicluster& b, DomainId domain, double threshold,
                      const Schema& schema);

/// Every maximal chain through `seed`, extending left and right along the
/// relation order by depth-first search and joining the two halves.
std::vector<BiclusterChain> search_chains(const Schema& schema, std::span<const Bicluster> biclusters,
                                          const Bicluster& seed, double threshold);

/// Linear map of scores onto [0, 1] over [min, max]; a degenerate range maps
/// to 1. Infinite scores are treated as the maximum.
std::vector<double> opacities(std::span<const double> scores);

/// Ranking order: higher score first, then shorter chain, then member ids.
bool chain_rank_less(const BiclusterChain& a, const ScoreReport& sa, const BiclusterChain& b,
                     const ScoreReport& sb);

struct SessionConfig {
  ModelKind model = ModelKind::binary;
  ScoreKind score = ScoreKind::local;
  double jaccard = 0.1;
  std::size_t min_support = 3;
  std::vector<std::string> domain_order;  // empty: every domain, first-seen order
  bool dedup_local_cells = false;
  InferenceOptions inference;
};

struct RankedChain {
  BiclusterChain chain;
  ScoreReport score;
};

struct ChainEvaluation {
  std::vector<RankedChain> ranked;
  std::vector<std::string> warnings;
};

struct Neighbor {
  std::string bicluster_id;
  ScoreReport score;
  double opacity = 0.0;
  double jaccard = 0.0;
  bool same_relation = false;
};

struct DocumentHit {
  std::string doc_id;
  std::vector<std::string> entities;  // pattern entities occurring in the doc
  std::string content;
};

/// Analyst session: data, mined biclusters, the background model and the
/// tiles the analyst has marked as known. Not internally synchronized.
class Session {
 public:
  Session(Dataset dataset, SessionConfig config,
          std::map<std::string, std::string> documents = {});

  const Dataset& dataset() const noexcept { return dataset_; }
  const TransactionMatrix& scoring_data() const noexcept { return data_; }
  const Schema& schema() const noexcept { return schema_; }
  const SessionConfig& config() const noexcept { return config_; }
  const std::vector<Bicluster>& biclusters() const noexcept { return biclusters_; }
  const Model& model() const noexcept { return model_; }
  const std::vector<NamedTile>& known_tiles() const noexcept { return known_; }
  const std::vector<NamedTile>& background_tiles() const noexcept { return background_; }
  std::vector<NamedTile> constraint_tiles() const;  // background plus known

  const Bicluster& bicluster(std::string_view id) const;

  ScoreReport score(const PatternTiles& pattern, std::optional<ScoreKind> kind = {}) const;

  std::vector<BiclusterChain> full_path_search(std::string_view seed) const;
  ChainEvaluation full_path_evaluate(std::string_view seed,
                                     std::optional<ScoreKind> kind = {}) const;
  std::vector<Neighbor> stepwise_evaluate(std::string_view seed,
                                          std::optional<ScoreKind> kind = {},
                                          std::optional<double> threshold = {}) const;

  /// Folds the patterns' tiles into the background and re-infers. Returns
  /// false when nothing new was added. On failure the session is unchanged.
  bool mark_known(std::span<const std::string> bicluster_ids);

  std::vector<DocumentHit> documents_for(std::string_view bicluster_id) const;
  std::vector<DocumentHit> documents_for_chain(std::span<const std::string> members) const;
  std::optional<DocumentHit> document(std::string_view doc_id) const;

 private:
  std::vector<DocumentHit> documents_for_pattern(std::span<const Bicluster* const> members) const;

  Dataset dataset_;
  SessionConfig config_;
  std::map<std::string, std::string> documents_;
  TransactionMatrix data_;
  Schema schema_;
  std::vector<Bicluster> biclusters_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::vector<NamedTile> background_;
  std::vector<NamedTile> known_;
  Model model_;
};

}  // namespace tilechain
