// Batch entry point: ingest, mine, infer, score, chains, run and bench.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "tilechain/error.hpp"
#include "tilechain/pipeline.hpp"
#include "tilechain/synth.hpp"

using namespace tilechain;

namespace {

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::input_not_found: return 2;
    case ErrorCategory::invalid_input:
    case ErrorCategory::domain_conflict:
    case ErrorCategory::unknown_domain: return 3;
    case ErrorCategory::inconsistent_tiles:
    case ErrorCategory::degenerate_target: return 4;
    case ErrorCategory::inference_failed: return 5;
    case ErrorCategory::not_found: return 6;
    case ErrorCategory::busy: return 7;
  }
  return 1;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size() && !text.empty()) {
    auto comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    if (comma > start) out.push_back(text.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

struct Flags {
  std::string input;
  std::string mode = "binary";
  std::string domains;
  std::size_t min_support = 3;
  double jaccard = 0.1;
  std::string score = "local";
  std::uint64_t seed = 42;
  std::string out = ".";
  std::string seed_bicluster;
  std::string documents;
  std::string bicluster;  // score: bicluster id or chain "a+b+c"
};

RunConfig to_config(const Flags& f) {
  RunConfig c;
  c.input = f.input;
  c.mode = model_kind_from_string(f.mode);
  c.domains = split_list(f.domains);
  c.min_support = f.min_support;
  if (c.min_support < 1) throw Error(ErrorCategory::invalid_input, "--min-support must be at least 1");
  c.jaccard = f.jaccard;
  c.score = score_kind_from_string(f.score);
  c.out_dir = f.out;
  c.seed = f.seed;
  if (!f.seed_bicluster.empty()) c.seed_bicluster = f.seed_bicluster;
  if (!f.documents.empty()) c.documents = f.documents;
  return c;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--input", f.input, "Records file (CSV or JSON lines)")->required();
  cmd->add_option("--mode", f.mode, "Model family: binary or real");
  cmd->add_option("--domains", f.domains, "Comma-separated domain order");
  cmd->add_option("--min-support", f.min_support, "Minimum bicluster support");
  cmd->add_option("--jaccard", f.jaccard, "Redescription threshold");
  cmd->add_option("--score", f.score, "Score kind: global or local");
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--documents", f.documents, "JSON object of document texts");
}

Session open_session(const RunConfig& c) {
  auto dataset = load_dataset(c.input);
  std::map<std::string, std::string> docs;
  if (c.documents) docs = read_documents_json(*c.documents);
  return Session(std::move(dataset), session_config(c), std::move(docs));
}

void write_artifact(const RunConfig& c, const char* name, const Json& j) {
  std::filesystem::create_directories(c.out_dir);
  const auto path = c.out_dir / name;
  write_text_file(path, dump(j));
  std::cout << "wrote " << path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bicluster chain discovery with maximum-entropy background models"};
  app.require_subcommand(1);
  Flags f;

  auto* ingest = app.add_subcommand("ingest", "Load records and write dataset.json");
  auto* mine = app.add_subcommand("mine", "Mine closed biclusters into biclusters.json");
  auto* infer = app.add_subcommand("infer", "Fit the background model into background-model.json");
  auto* score = app.add_subcommand("score", "Score a bicluster or chain into score.json");
  auto* chains = app.add_subcommand("chains", "Rank chains through a seed into chains.json");
  auto* run = app.add_subcommand("run", "Mine, fit and optionally rank chains");
  for (auto* cmd : {ingest, mine, infer, score, chains, run}) add_common(cmd, f);
  score->add_option("--bicluster", f.bicluster, "Bicluster id, or chain members joined by '+'")
      ->required();
  chains->add_option("--seed-bicluster", f.seed_bicluster, "Seed bicluster id")->required();
  run->add_option("--seed-bicluster", f.seed_bicluster, "Seed bicluster id");

  auto* bench = app.add_subcommand("bench", "Synthetic runtime benchmark as CSV");
  std::string sizes = "200,400,800", betas = "0.01..0.05:0.02", modes = "binary,real", csv_path;
  int reps = 3;
  std::uint64_t bench_seed = 42;
  bench->add_option("--sizes", sizes, "Comma-separated square sizes");
  bench->add_option("--beta", betas, "Densities: list or a..b[:step]");
  bench->add_option("--modes", modes, "Comma-separated model families");
  bench->add_option("--reps", reps, "Timed repetitions per configuration");
  bench->add_option("--seed", bench_seed, "Random seed");
  bench->add_option("--out", csv_path, "CSV path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (bench->parsed()) {
      BenchConfig bc;
      bc.sizes.clear();
      for (const auto& s : split_list(sizes)) bc.sizes.push_back(static_cast<Index>(std::stoul(s)));
      bc.densities = parse_density_grid(betas);
      bc.modes.clear();
      for (const auto& m : split_list(modes)) bc.modes.push_back(model_kind_from_string(m));
      bc.reps = reps;
      bc.seed = bench_seed;
      bc.inference.real.seed = bench_seed;
      std::ofstream file;
      std::ostream* out = &std::cout;
      if (!csv_path.empty()) {
        file.open(csv_path, std::ios::trunc);
        if (!file) throw Error(ErrorCategory::invalid_input, "cannot write '" + csv_path + "'");
        out = &file;
      }
      run_benchmark(bc, out);
      return 0;
    }

    const RunConfig config = to_config(f);
    if (run->parsed()) {
      const auto result = run_pipeline(config);
      for (const auto& p : result.written) std::cout << "wrote " << p.string() << "\n";
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "biclusters " << result.summary.biclusters << " entities "
                << result.summary.entities << " relationships " << result.summary.relationships
                << "\n";
      return 0;
    }
    if (ingest->parsed()) {
      const auto dataset = load_dataset(config.input);
      write_artifact(config, "dataset.json", dataset_to_json(dataset));
      std::cout << "documents " << dataset.matrix.n_rows() << " entities "
                << dataset.matrix.n_cols() << " domains " << dataset.domains.size() << "\n";
      return 0;
    }

    const Session session = open_session(config);
    if (mine->parsed()) {
      write_artifact(config, "biclusters.json", biclusters_artifact(session));
    } else if (infer->parsed()) {
      write_artifact(config, "background-model.json", background_artifact(session));
      if (!is_converged(session.model())) std::cerr << "warning: model did not converge\n";
    } else if (score->parsed()) {
      std::vector<const Bicluster*> members;
      for (std::size_t start = 0; start <= f.bicluster.size();) {
        auto plus = f.bicluster.find('+', start);
        if (plus == std::string::npos) plus = f.bicluster.size();
        members.push_back(&session.bicluster(f.bicluster.substr(start, plus - start)));
        start = plus + 1;
      }
      const auto tiles = chain_to_tiles(f.bicluster, members, session.dataset());
      const auto report = session.score(tiles);
      write_artifact(config, "score.json", to_json(report));
      std::cout << to_string(report.kind) << " " << report.value << "\n";
    } else if (chains->parsed()) {
      write_artifact(config, "chains.json", chains_artifact(session, f.seed_bicluster));
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << to_string(e.category()) << ": " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "internal: " << e.what() << "\n";
    return 1;
  }
}
