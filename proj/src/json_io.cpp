#include "tilechain/json_io.hpp"

#include <cmath>

#include "tilechain/error.hpp"

namespace tilechain {

namespace {

Json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

template <typename T>
T require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCategory::invalid_input, std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCategory::invalid_input, std::string("field '") + key + "' has the wrong type");
  }
}

Json labels(std::span<const Index> ids, const Dataset& dataset) {
  Json out = Json::array();
  for (Index e : ids) out.push_back(dataset.entity_labels.at(e));
  return out;
}

}  // namespace

Json to_json(const TransactionMatrix& matrix) {
  Json cells = Json::array();
  for (const auto& t : matrix.triplets()) cells.push_back(Json::array({t.row, t.col, t.value}));
  return Json{{"n_rows", matrix.n_rows()},
              {"n_cols", matrix.n_cols()},
              {"mode", to_string(matrix.mode())},
              {"cells", std::move(cells)}};
}

TransactionMatrix matrix_from_json(const Json& j) {
  const auto n_rows = require<Index>(j, "n_rows");
  const auto n_cols = require<Index>(j, "n_cols");
  const auto mode = value_mode_from_string(require<std::string>(j, "mode"));
  std::vector<Triplet> cells;
  for (const auto& c : require<Json>(j, "cells")) {
    if (!c.is_array() || c.size() != 3) {
      throw Error(ErrorCategory::invalid_input, "matrix cells must be [row, col, value]");
    }
    cells.push_back({c[0].get<Index>(), c[1].get<Index>(), c[2].get<double>()});
  }
  return TransactionMatrix(n_rows, n_cols, mode, std::move(cells));
}

Json to_json(const Schema& schema, const Dataset& dataset) {
  Json domains = Json::array();
  for (DomainId id : schema.domain_order) {
    const auto& domain = dataset.domains.at(id);
    domains.push_back(Json{{"name", domain.name}, {"entities", labels(domain.entity_ids, dataset)}});
  }
  Json relations = Json::array();
  for (const auto& r : schema.relations) {
    relations.push_back(Json{{"id", r.id},
                             {"name", r.name},
                             {"left_domain", dataset.domains[r.left_domain].name},
                             {"right_domain", dataset.domains[r.right_domain].name},
                             {"pairs", r.pairs.size()}});
  }
  return Json{{"domains", std::move(domains)}, {"relations", std::move(relations)}};
}

Json to_json(const Bicluster& bicluster, const Schema& schema, const Dataset& dataset) {
  return Json{{"id", bicluster.id},
              {"relation", schema.relations.at(bicluster.relation).name},
              {"left", labels(bicluster.left, dataset)},
              {"right", labels(bicluster.right, dataset)}};
}

Json biclusters_to_json(const std::vector<Bicluster>& biclusters, const Schema& schema,
                        const Dataset& dataset) {
  Json out = Json::array();
  for (const auto& b : biclusters) out.push_back(to_json(b, schema, dataset));
  return out;
}

Json to_json(const Tile& tile) { return Json{{"rows", tile.rows}, {"cols", tile.cols}}; }

Tile tile_from_json(const Json& j) {
  Tile t{require<std::vector<Index>>(j, "rows"), require<std::vector<Index>>(j, "cols")};
  t.canonicalize();
  return t;
}

Json to_json(const BinaryModel& model) {
  Json tiles = Json::array();
  for (const auto& t : model.tiles()) {
    Json jt = to_json(t.tile);
    jt["name"] = t.name;
    jt["gamma"] = t.gamma;
    tiles.push_back(std::move(jt));
  }
  Json cells = Json::array();
  Json pinned = Json::array();
  for (Index i = 0; i < model.n_rows(); ++i) {
    for (Index j = 0; j < model.n_cols(); ++j) {
      const double p = model.probability(i, j);
      if (p != 0.5) cells.push_back(Json::array({i, j, p}));
      if (model.pinned(i, j)) pinned.push_back(Json::array({i, j}));
    }
  }
  return Json{{"model", "binary"},
              {"n_rows", model.n_rows()},
              {"n_cols", model.n_cols()},
              {"converged", model.converged()},
              {"sweeps", model.sweeps()},
              {"max_residual", model.max_residual()},
              {"tiles", std::move(tiles)},
              {"cells", std::move(cells)},
              {"pinned", std::move(pinned)}};
}

Json to_json(const RealModel& model) {
  Json tiles = Json::array();
  for (std::size_t k = 0; k < model.tiles().size(); ++k) {
    const auto& t = model.tiles()[k];
    Json jt = to_json(t.tile);
    jt["name"] = t.name;
    jt["sum"] = t.sum;
    jt["sum_sq"] = t.sum_sq;
    jt["lambda_m"] = model.lambda_m()[k];
    jt["lambda_v"] = model.lambda_v()[k];
    tiles.push_back(std::move(jt));
  }
  return Json{{"model", "real"},
              {"n_rows", model.n_rows()},
              {"n_cols", model.n_cols()},
              {"converged", model.converged()},
              {"iterations", model.iterations()},
              {"gradient_norm", model.gradient_norm()},
              {"tiles", std::move(tiles)}};
}

Json to_json(const Model& model) {
  return std::visit([](const auto& m) { return to_json(m); }, model);
}

Model model_from_json(const Json& j) {
  const auto kind = model_kind_from_string(require<std::string>(j, "model"));
  const auto n_rows = require<Index>(j, "n_rows");
  const auto n_cols = require<Index>(j, "n_cols");
  const std::size_t n_cells = static_cast<std::size_t>(n_rows) * n_cols;
  const auto& jtiles = require<Json>(j, "tiles");

  if (kind == ModelKind::binary) {
    std::vector<BinaryTile> tiles;
    for (const auto& jt : jtiles) {
      tiles.push_back({tile_from_json(jt), require<double>(jt, "gamma"), require<std::string>(jt, "name")});
    }
    std::vector<double> probs(n_cells, 0.5);
    for (const auto& c : require<Json>(j, "cells")) {
      const std::size_t cell = c.at(0).get<std::size_t>() * n_cols + c.at(1).get<std::size_t>();
      if (cell >= n_cells) throw Error(ErrorCategory::invalid_input, "model cell out of bounds");
      probs[cell] = c.at(2).get<double>();
    }
    // The pinning tile is not part of the snapshot; recover it as the first
    // exact tile covering the cell, or mark the cell with tile 0.
    std::vector<std::int32_t> pinned_by(n_cells, -1);
    for (const auto& c : require<Json>(j, "pinned")) {
      const std::size_t cell = c.at(0).get<std::size_t>() * n_cols + c.at(1).get<std::size_t>();
      if (cell >= n_cells) throw Error(ErrorCategory::invalid_input, "model cell out of bounds");
      pinned_by[cell] = 0;
    }
    for (std::size_t k = tiles.size(); k-- > 0;) {
      if (!tiles[k].exact()) continue;
      for (Index r : tiles[k].tile.rows) {
        for (Index col : tiles[k].tile.cols) {
          const std::size_t cell = static_cast<std::size_t>(r) * n_cols + col;
          if (cell < n_cells && pinned_by[cell] >= 0) pinned_by[cell] = static_cast<std::int32_t>(k);
        }
      }
    }
    return binary_model_from_parameters(std::move(tiles), n_rows, n_cols, std::move(probs),
                                        std::move(pinned_by), require<bool>(j, "converged"),
                                        require<int>(j, "sweeps"), require<double>(j, "max_residual"));
  }

  std::vector<RealTile> tiles;
  std::vector<double> lm, lv;
  for (const auto& jt : jtiles) {
    tiles.push_back({tile_from_json(jt), require<double>(jt, "sum"), require<double>(jt, "sum_sq"),
                     require<std::string>(jt, "name")});
    lm.push_back(require<double>(jt, "lambda_m"));
    lv.push_back(require<double>(jt, "lambda_v"));
  }
  return real_model_from_parameters(std::move(tiles), n_rows, n_cols, std::move(lm), std::move(lv),
                                    require<bool>(j, "converged"), require<int>(j, "iterations"),
                                    require<double>(j, "gradient_norm"));
}

Json to_json(const ScoreReport& report) {
  Json per_tile = Json::array();
  for (double v : report.per_tile) per_tile.push_back(number_or_null(v));
  Json out{{"pattern_id", report.pattern_id},
           {"score_kind", to_string(report.kind)},
           {"model", to_string(report.model)},
           {"value", number_or_null(report.value)}};
  if (report.infinite) out["infinite"] = true;
  out["per_tile"] = std::move(per_tile);
  return out;
}

Json to_json(const RankedChain& ranked, const Schema& schema, const Dataset& dataset) {
  (void)schema;
  Json shared = Json::array();
  for (DomainId d : ranked.chain.shared_domains) shared.push_back(dataset.domains.at(d).name);
  return Json{{"id", ranked.chain.id()},
              {"members", ranked.chain.members},
              {"shared_domains", std::move(shared)},
              {"score", to_json(ranked.score)}};
}

Json to_json(const ChainEvaluation& evaluation, const Schema& schema, const Dataset& dataset) {
  Json chains = Json::array();
  std::size_t rank = 1;
  for (const auto& r : evaluation.ranked) {
    Json c = to_json(r, schema, dataset);
    c["rank"] = rank++;
    chains.push_back(std::move(c));
  }
  return Json{{"chains", std::move(chains)}, {"warnings", evaluation.warnings}};
}

Json to_json(const Neighbor& neighbor) {
  return Json{{"bicluster_id", neighbor.bicluster_id},
              {"score", number_or_null(neighbor.score.value)},
              {"infinite", neighbor.score.infinite},
              {"opacity", neighbor.opacity},
              {"jaccard", neighbor.jaccard},
              {"same_relation", neighbor.same_relation},
              {"report", to_json(neighbor.score)}};
}

Json to_json(const DocumentHit& hit) {
  return Json{{"doc_id", hit.doc_id}, {"entities", hit.entities}, {"content", hit.content}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace tilechain
