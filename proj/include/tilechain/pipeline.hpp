#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tilechain/explorer.hpp"
#include "tilechain/json_io.hpp"

namespace tilechain {

struct RunConfig {
  std::string input;
  ModelKind mode = ModelKind::binary;
  std::vector<std::string> domains;  // empty: first-seen order
  std::size_t min_support = 3;
  double jaccard = 0.1;
  ScoreKind score = ScoreKind::local;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 42;
  std::optional<std::string> seed_bicluster;
  std::optional<std::string> documents;  // JSON object doc_id -> text
};

SessionConfig session_config(const RunConfig& config);

/// Reads a JSON object mapping document ids to their text.
std::map<std::string, std::string> read_documents_json(const std::string& path);

Dataset load_dataset(const std::string& path);

/// Labels plus sparse counts, as written by `ingest`.
Json dataset_to_json(const Dataset& dataset);

/// Bicluster count, distinct entities and distinct entity pairs covered.
struct MiningSummary {
  std::size_t biclusters = 0;
  std::size_t entities = 0;
  std::size_t relationships = 0;
};
MiningSummary summarize_biclusters(const std::vector<Bicluster>& biclusters);

Json biclusters_artifact(const Session& session);
Json background_artifact(const Session& session);
Json chains_artifact(const Session& session, const std::string& seed);

struct PipelineResult {
  MiningSummary summary;
  std::vector<std::filesystem::path> written;
  std::vector<std::string> warnings;
};

/// Ingests, mines, fits the background model and, when a seed bicluster is
/// given, ranks its chains. Writes biclusters.json, background-model.json
/// and chains.json under `out_dir`.
PipelineResult run_pipeline(const RunConfig& config);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace tilechain
