#pragma once

#include <string>

#include <json.hpp>

#include "tilechain/explorer.hpp"

namespace tilechain {

using Json = nlohmann::ordered_json;

Json to_json(const TransactionMatrix& matrix);
TransactionMatrix matrix_from_json(const Json& j);

Json to_json(const Schema& schema, const Dataset& dataset);

/// {id, relation, left:[labels], right:[labels]}
Json to_json(const Bicluster& bicluster, const Schema& schema, const Dataset& dataset);
Json biclusters_to_json(const std::vector<Bicluster>& biclusters, const Schema& schema,
                        const Dataset& dataset);

Json to_json(const Tile& tile);
Tile tile_from_json(const Json& j);

/// Binary: dims, tiles with targets, cells whose probability differs from
/// 1/2 and pinned cells. Real: dims, tiles with targets and multipliers.
Json to_json(const BinaryModel& model);
Json to_json(const RealModel& model);
Json to_json(const Model& model);
Model model_from_json(const Json& j);

/// {pattern_id, score_kind, model, value, per_tile}; infinite values are
/// written as null with "infinite": true.
Json to_json(const ScoreReport& report);

Json to_json(const RankedChain& ranked, const Schema& schema, const Dataset& dataset);
Json to_json(const ChainEvaluation& evaluation, const Schema& schema, const Dataset& dataset);
Json to_json(const Neighbor& neighbor);
Json to_json(const DocumentHit& hit);

/// Two-space indented text with a trailing newline.
std::string dump(const Json& j);

}  // namespace tilechain
