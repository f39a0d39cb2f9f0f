#include "tilechain/pipeline.hpp"

#include <fstream>
#include <set>

#include "tilechain/error.hpp"

namespace tilechain {

SessionConfig session_config(const RunConfig& config) {
  SessionConfig s;
  s.model = config.mode;
  s.score = config.score;
  s.jaccard = config.jaccard;
  s.min_support = config.min_support;
  s.domain_order = config.domains;
  s.inference.real.seed = config.seed;
  return s;
}

std::map<std::string, std::string> read_documents_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::input_not_found, "cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::invalid_input, "'" + path + "': " + e.what());
  }
  if (!j.is_object()) {
    throw Error(ErrorCategory::invalid_input, "'" + path + "' must hold an object of documents");
  }
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) {
      throw Error(ErrorCategory::invalid_input, "document '" + k + "' must be a string");
    }
    out.emplace(k, v.get<std::string>());
  }
  return out;
}

Dataset load_dataset(const std::string& path) {
  const auto records = read_records_file(path);
  return load_transactions(records);
}

Json dataset_to_json(const Dataset& dataset) {
  Json domains = Json::array();
  for (const auto& d : dataset.domains) {
    Json entities = Json::array();
    for (Index e : d.entity_ids) entities.push_back(dataset.entity_labels[e]);
    domains.push_back(Json{{"name", d.name}, {"entities", std::move(entities)}});
  }
  return Json{{"documents", dataset.doc_ids},
              {"entities", dataset.entity_labels},
              {"domains", std::move(domains)},
              {"matrix", to_json(dataset.matrix)}};
}

MiningSummary summarize_biclusters(const std::vector<Bicluster>& biclusters) {
  std::set<Index> entities;
  std::set<std::pair<Index, Index>> pairs;
  for (const auto& b : biclusters) {
    entities.insert(b.left.begin(), b.left.end());
    entities.insert(b.right.begin(), b.right.end());
    for (Index l : b.left) {
      for (Index r : b.right) pairs.emplace(l, r);
    }
  }
  return {biclusters.size(), entities.size(), pairs.size()};
}

Json biclusters_artifact(const Session& session) {
  const auto s = summarize_biclusters(session.biclusters());
  return Json{{"min_support", session.config().min_support},
              {"summary",
               {{"biclusters", s.biclusters},
                {"entities", s.entities},
                {"relationships", s.relationships}}},
              {"schema", to_json(session.schema(), session.dataset())},
              {"biclusters",
               biclusters_to_json(session.biclusters(), session.schema(), session.dataset())}};
}

Json background_artifact(const Session& session) { return to_json(session.model()); }

Json chains_artifact(const Session& session, const std::string& seed) {
  Json out = to_json(session.full_path_evaluate(seed), session.schema(), session.dataset());
  Json head{{"seed", seed},
            {"jaccard", session.config().jaccard},
            {"score_kind", to_string(session.config().score)}};
  head.update(out);
  return head;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCategory::invalid_input, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCategory::invalid_input, "failed writing '" + path.string() + "'");
}

PipelineResult run_pipeline(const RunConfig& config) {
  auto dataset = load_dataset(config.input);
  std::map<std::string, std::string> docs;
  if (config.documents) docs = read_documents_json(*config.documents);
  Session session(std::move(dataset), session_config(config), std::move(docs));

  std::filesystem::create_directories(config.out_dir);
  PipelineResult result;
  result.summary = summarize_biclusters(session.biclusters());

  const auto write = [&](const char* name, const Json& j) {
    const auto path = config.out_dir / name;
    write_text_file(path, dump(j));
    result.written.push_back(path);
  };
  write("biclusters.json", biclusters_artifact(session));
  write("background-model.json", background_artifact(session));
  if (!is_converged(session.model())) {
    result.warnings.push_back("background model did not converge");
  }
  if (config.seed_bicluster) {
    const Json chains = chains_artifact(session, *config.seed_bicluster);
    for (const auto& w : chains.at("warnings")) result.warnings.push_back(w.get<std::string>());
    write("chains.json", chains);
  }
  return result;
}

}  // namespace tilechain
