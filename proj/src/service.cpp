#include "tilechain/service.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include <httplib.h>

#include "tilechain/error.hpp"
#include "tilechain/pipeline.hpp"

namespace tilechain {

namespace {

struct HttpError {
  int status;
  std::string error;
  std::string category;
  std::string detail;
};

int status_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::input_not_found:
    case ErrorCategory::not_found:
      return 404;
    case ErrorCategory::busy:
      return 409;
    case ErrorCategory::inconsistent_tiles:
    case ErrorCategory::degenerate_target:
      return 422;
    case ErrorCategory::inference_failed:
      return 500;
    default:
      return 400;
  }
}

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& error,
                const std::string& category, const std::string& detail) {
  send_json(res, status, Json{{"error", error}, {"category", category}, {"detail", detail}});
}

Json parse_body(const httplib::Request& req) {
  Json j = Json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw HttpError{400, "malformed body", "invalid-input", "request body must be a JSON object"};
  }
  return j;
}

template <typename T>
T field(const Json& body, const char* key, T fallback) {
  if (!body.contains(key) || body[key].is_null()) return fallback;
  try {
    return body[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw HttpError{400, "malformed body", "invalid-input",
                    std::string("field '") + key + "' has the wrong type"};
  }
}

std::string require_string(const Json& body, const char* key) {
  auto v = field<std::string>(body, key, "");
  if (v.empty()) {
    throw HttpError{400, "malformed body", "invalid-input",
                    std::string("field '") + key + "' is required"};
  }
  return v;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool safe_name(const std::string& name) {
  return !name.empty() && name.front() != '.' && name.find('/') == std::string::npos &&
         name.find('\\') == std::string::npos;
}

enum class Status { converged, inferring, failed };

const char* to_string(Status s) {
  switch (s) {
    case Status::converged: return "converged";
    case Status::inferring: return "inferring";
    default: return "failed";
  }
}

struct Job {
  std::string status = "running";  // running | done | failed
  Json result;
  Json error;
};

struct SessionEntry {
  std::string id;
  std::string dataset;
  std::string created;
  std::unique_ptr<Session> session;
  std::atomic<bool> busy{false};
  std::atomic<Status> status{Status::converged};
  std::atomic<std::size_t> known_tiles{0};
  std::atomic<bool> converged{true};

  std::mutex jobs_mu;
  std::map<std::string, Job> jobs;
  std::size_t next_job = 1;
};

/// Holds a session's busy flag; movable so a background job can own it.
class BusyGuard {
 public:
  explicit BusyGuard(std::shared_ptr<SessionEntry> entry) : entry_(std::move(entry)) {
    bool expected = false;
    if (!entry_->busy.compare_exchange_strong(expected, true)) {
      entry_.reset();
      throw HttpError{409, "session busy", to_string(ErrorCategory::busy),
                      "another evaluation or update is in progress"};
    }
  }
  BusyGuard(BusyGuard&& other) noexcept = default;
  BusyGuard& operator=(BusyGuard&&) = delete;
  ~BusyGuard() {
    if (entry_) entry_->busy.store(false);
  }

 private:
  std::shared_ptr<SessionEntry> entry_;
};

Json handle_json(const SessionEntry& e) {
  const auto& cfg = e.session->config();
  return Json{{"id", e.id},
              {"dataset", e.dataset},
              {"status", to_string(e.status.load())},
              {"busy", e.busy.load()},
              {"created", e.created},
              {"model", to_string(cfg.model)},
              {"score_kind", to_string(cfg.score)},
              {"jaccard", cfg.jaccard},
              {"min_support", cfg.min_support},
              {"converged", e.converged.load()},
              {"biclusters", e.session->biclusters().size()},
              {"known_tiles", e.known_tiles.load()}};
}

struct Upload {
  std::vector<Record> records;
  std::map<std::string, std::string> documents;
};

}  // namespace

struct ApiService::Impl {
  ServiceConfig config;

  std::mutex mu;  // guards sessions, uploads and counters
  std::map<std::string, std::shared_ptr<SessionEntry>> sessions;
  std::map<std::string, Upload> uploads;
  std::size_t next_session = 1;

  std::mutex threads_mu;
  std::vector<std::thread> threads;

  std::shared_ptr<SessionEntry> find(const std::string& id) {
    std::lock_guard lk(mu);
    auto it = sessions.find(id);
    if (it == sessions.end()) {
      throw HttpError{404, "session not found", to_string(ErrorCategory::not_found),
                      "no session '" + id + "'"};
    }
    return it->second;
  }

  std::pair<Dataset, std::map<std::string, std::string>> resolve_dataset(const std::string& name) {
    {
      std::lock_guard lk(mu);
      if (auto it = uploads.find(name); it != uploads.end()) {
        return {load_transactions(it->second.records), it->second.documents};
      }
    }
    if (!safe_name(name)) {
      throw HttpError{400, "bad dataset name", to_string(ErrorCategory::invalid_input),
                      "dataset names may not contain path separators"};
    }
    namespace fs = std::filesystem;
    const fs::path base = config.data_dir / name;
    for (const fs::path& candidate :
         {base, fs::path(base.string() + ".csv"), fs::path(base.string() + ".jsonl")}) {
      if (!fs::is_regular_file(candidate)) continue;
      std::map<std::string, std::string> docs;
      fs::path docs_path = candidate;
      docs_path.replace_extension(".docs.json");
      if (fs::is_regular_file(docs_path)) docs = read_documents_json(docs_path.string());
      return {load_dataset(candidate.string()), std::move(docs)};
    }
    throw HttpError{404, "dataset not found", to_string(ErrorCategory::input_not_found),
                    "no dataset '" + name + "' in the data directory"};
  }

  void spawn(std::function<void()> fn) {
    std::lock_guard lk(threads_mu);
    threads.emplace_back(std::move(fn));
  }

  // --- handlers -----------------------------------------------------------

  void create_dataset(const httplib::Request& req, httplib::Response& res) {
    const Json body = parse_body(req);
    const std::string name = require_string(body, "name");
    if (!safe_name(name)) {
      throw HttpError{400, "bad dataset name", to_string(ErrorCategory::invalid_input),
                      "dataset names may not contain path separators"};
    }
    if (!body.contains("records") || !body["records"].is_array()) {
      throw HttpError{400, "malformed body", "invalid-input", "field 'records' must be an array"};
    }
    Upload up;
    for (const auto& r : body["records"]) {
      if (!r.is_object()) {
        throw HttpError{400, "malformed body", "invalid-input", "records must be objects"};
      }
      Record rec;
      rec.doc_id = require_string(r, "doc_id");
      rec.entity = require_string(r, "entity");
      rec.domain = require_string(r, "domain");
      rec.count = field<std::int64_t>(r, "count", 1);
      if (rec.count < 0) {
        throw HttpError{400, "malformed body", "invalid-input", "counts must be nonnegative"};
      }
      up.records.push_back(std::move(rec));
    }
    if (body.contains("documents")) {
      if (!body["documents"].is_object()) {
        throw HttpError{400, "malformed body", "invalid-input", "'documents' must be an object"};
      }
      for (const auto& [k, v] : body["documents"].items()) {
        up.documents.emplace(k, v.is_string() ? v.get<std::string>() : v.dump());
      }
    }
    const Dataset probe = load_transactions(up.records);  // validate now
    const std::size_t n = up.records.size();
    {
      std::lock_guard lk(mu);
      uploads[name] = std::move(up);
    }
    send_json(res, 201,
              Json{{"name", name},
                   {"records", n},
                   {"documents", probe.matrix.n_rows()},
                   {"entities", probe.matrix.n_cols()}});
  }

  void create_session(const httplib::Request& req, httplib::Response& res) {
    const Json body = parse_body(req);
    const std::string dataset = require_string(body, "dataset");
    SessionConfig cfg;
    cfg.model = model_kind_from_string(field<std::string>(body, "mode", "binary"));
    cfg.score = score_kind_from_string(field<std::string>(body, "score_kind", "local"));
    cfg.jaccard = field<double>(body, "jaccard", cfg.jaccard);
    cfg.min_support = field<std::size_t>(body, "min_support", cfg.min_support);
    cfg.domain_order = field<std::vector<std::string>>(body, "domains", {});
    cfg.dedup_local_cells = field<bool>(body, "dedup_local_cells", false);
    cfg.inference.real.seed = field<std::uint64_t>(body, "seed", cfg.inference.real.seed);
    if (!(cfg.jaccard >= 0.0 && cfg.jaccard <= 1.0)) {
      throw HttpError{400, "malformed body", "invalid-input", "jaccard must lie in [0, 1]"};
    }
    if (cfg.min_support < 1) {
      throw HttpError{400, "malformed body", "invalid-input", "min_support must be at least 1"};
    }

    auto [data, docs] = resolve_dataset(dataset);
    auto entry = std::make_shared<SessionEntry>();
    entry->dataset = dataset;
    entry->created = utc_now();
    entry->session = std::make_unique<Session>(std::move(data), std::move(cfg), std::move(docs));
    entry->converged = is_converged(entry->session->model());
    {
      std::lock_guard lk(mu);
      entry->id = "s" + std::to_string(next_session++);
      sessions.emplace(entry->id, entry);
    }
    send_json(res, 201, handle_json(*entry));
  }

  std::optional<ScoreKind> requested_kind(const Json& body) {
    if (!body.contains("score_kind") || body["score_kind"].is_null()) return std::nullopt;
    return score_kind_from_string(field<std::string>(body, "score_kind", ""));
  }

  // Runs `work` now for local scores, or as a background job for global ones.
  void evaluate(const std::shared_ptr<SessionEntry>& entry, ScoreKind kind,
                std::function<Json()> work, httplib::Response& res) {
    BusyGuard guard(entry);
    if (kind == ScoreKind::local) {
      send_json(res, 200, work());
      return;
    }
    std::string job_id;
    {
      std::lock_guard lk(entry->jobs_mu);
      job_id = "j" + std::to_string(entry->next_job++);
      entry->jobs.emplace(job_id, Job{});
    }
    auto shared_guard = std::make_shared<BusyGuard>(std::move(guard));
    spawn([entry, job_id, work = std::move(work), shared_guard]() mutable {
      Job done;
      try {
        done.result = work();
        done.status = "done";
      } catch (const Error& e) {
        done.status = "failed";
        done.error = Json{{"error", "evaluation failed"},
                          {"category", to_string(e.category())},
                          {"detail", e.what()}};
      } catch (const std::exception& e) {
        done.status = "failed";
        done.error = Json{{"error", "evaluation failed"}, {"category", "internal"}, {"detail", e.what()}};
      }
      shared_guard.reset();  // release the session before publishing
      std::lock_guard lk(entry->jobs_mu);
      entry->jobs[job_id] = std::move(done);
    });
    send_json(res, 202,
              Json{{"job_id", job_id},
                   {"status", "running"},
                   {"poll", "/sessions/" + entry->id + "/jobs/" + job_id}});
  }

  void status(const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, handle_json(*find(req.matches[1])));
  }

  void schema(const httplib::Request& req, httplib::Response& res) {
    auto entry = find(req.matches[1]);
    send_json(res, 200, to_json(entry->session->schema(), entry->session->dataset()));
  }

  void biclusters(const httplib::Request& req, httplib::Response& res) {
    auto entry = find(req.matches[1]);
    const Session& s = *entry->session;
    send_json(res, 200,
              Json{{"biclusters", biclusters_to_json(s.biclusters(), s.schema(), s.dataset())}});
  }

  void full_path(const httplib::Request& req, httplib::Response& res) {
    auto entry = find(req.matches[1]);
    const Json body = parse_body(req);
    const std::string seed = require_string(body, "seed");
    const Session& s = *entry->session;
    (void)s.bicluster(seed);
    const ScoreKind kind = requested_kind(body).value_or(s.config().score);
    evaluate(entry, kind, [&s, seed, kind] {
      Json out{{"seed", seed}, {"score_kind", to_string(kind)}, {"jaccard", s.config().jaccard}};
      out.update(to_json(s.full_path_evaluate(seed, kind), s.schema(), s.dataset()));
      return out;
    }, res);
  }

  void stepwise(const httplib::Request& req, httplib::Response& res) {
    auto entry = find(req.matches[1]);
    const Json body = parse_body(req);
    const std::string seed = require_string(body, "seed");
    const Session& s = *entry->session;
    (void)s.bicluster(seed);
    const ScoreKind kind = requested_kind(body).value_or(s.config().score);
    const double phi = field<double>(body, "jaccard", s.config().jaccard);
    evaluate(entry, kind, [&s, seed, kind, phi] {
      Json neighbors = Json::array();
      for (const auto& n : s.stepwise_evaluate(seed, kind, phi)) neighbors.push_back(to_json(n));
      return Json{{"seed", seed},
                  {"score_kind", to_string(kind)},
                  {"jaccard", phi},
                  {"neighbors", std::move(neighbors)}};
    }, res);
  }

  void mark_known(const httplib::Request& req, httplib::Response& res) {
    auto entry = find(req.matches[1]);
    const Json body = parse_body(req);
    const auto ids = field<std::vector<std::string>>(body, "pattern_ids", {});
    for (const auto& id : ids) (void)entry->session->bicluster(id);

    BusyGuard guard(entry);
    entry->status = Status::inferring;
    bool changed = false;
    try {
      changed = entry->session->mark_known(ids);
    } catch (const Error& e) {
      // The session rolled back to its previous model.
      entry->status = Status::converged;
      Json out = handle_json(*entry);
      out["changed"] = false;
      out["error"] = Json{{"error", "model update failed"},
                          {"category", to_string(e.category())},
                          {"detail", e.what()}};
      send_json(res, status_for(e.category()), out);
      return;
    }
    entry->known_tiles = entry->session->known_tiles().size();
    entry->converged = is_converged(entry->session->model());
    entry->status = Status::converged;
    Json out = handle_json(*entry);
    out["changed"] = changed;
    send_json(res, 200, out);
  }

  void job(const httplib::Request& req, httplib::Response& res) {
    auto entry = find(req.matches[1]);
    const std::string job_id = req.matches[2];
    std::lock_guard lk(entry->jobs_mu);
    auto it = entry->jobs.find(job_id);
    if (it == entry->jobs.end()) {
      throw HttpError{404, "job not found", to_string(ErrorCategory::not_found),
                      "no job '" + job_id + "'"};
    }
    Json out{{"job_id", job_id}, {"status", it->second.status}};
    if (it->second.status == "done") out["result"] = it->second.result;
    if (it->second.status == "failed") out["error"] = it->second.error;
    send_json(res, 200, out);
  }

  void documents(const httplib::Request& req, httplib::Response& res) {
    auto entry = find(req.matches[1]);
    const std::string bid = req.matches[2];
    Json docs = Json::array();
    for (const auto& d : entry->session->documents_for(bid)) docs.push_back(to_json(d));
    send_json(res, 200, Json{{"bicluster_id", bid}, {"documents", std::move(docs)}});
  }

  void document(const httplib::Request& req, httplib::Response& res) {
    const std::string doc_id = req.matches[1];
    std::vector<std::shared_ptr<SessionEntry>> candidates;
    if (req.has_param("session")) {
      candidates.push_back(find(req.get_param_value("session")));
    } else {
      std::lock_guard lk(mu);
      for (const auto& [_, e] : sessions) candidates.push_back(e);
    }
    for (const auto& e : candidates) {
      if (auto hit = e->session->document(doc_id)) {
        Json out = to_json(*hit);
        out["session"] = e->id;
        send_json(res, 200, out);
        return;
      }
    }
    throw HttpError{404, "document not found", to_string(ErrorCategory::not_found),
                    "no document '" + doc_id + "'"};
  }

  void snapshot(const httplib::Request& req, httplib::Response& res) {
    auto entry = find(req.matches[1]);
    BusyGuard guard(entry);
    const Session& s = *entry->session;
    Json known = Json::array();
    for (const auto& t : s.known_tiles()) {
      Json jt = to_json(t.tile);
      jt["name"] = t.name;
      known.push_back(std::move(jt));
    }
    const Json snap{{"session", handle_json(*entry)},
                    {"known_tiles", std::move(known)},
                    {"model", to_json(s.model())}};
    const auto dir = config.data_dir / "snapshots";
    std::filesystem::create_directories(dir);
    const auto path = dir / (entry->id + ".json");
    write_text_file(path, dump(snap));
    send_json(res, 200, Json{{"id", entry->id}, {"path", path.string()}});
  }

  void remove(const httplib::Request& req, httplib::Response& res) {
    auto entry = find(req.matches[1]);
    BusyGuard guard(entry);
    {
      std::lock_guard lk(mu);
      sessions.erase(entry->id);
    }
    send_json(res, 200, Json{{"id", entry->id}, {"deleted", true}});
  }
};

ApiService::ApiService(ServiceConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
}

ApiService::~ApiService() { drain(); }

void ApiService::drain() {
  std::vector<std::thread> pending;
  {
    std::lock_guard lk(impl_->threads_mu);
    pending.swap(impl_->threads);
  }
  for (auto& t : pending) t.join();
}

void ApiService::mount(httplib::Server& server) {
  Impl* impl = impl_.get();
  using Handler = void (Impl::*)(const httplib::Request&, httplib::Response&);
  auto wrap = [impl](Handler h) {
    return [impl, h](const httplib::Request& req, httplib::Response& res) {
      try {
        (impl->*h)(req, res);
      } catch (const HttpError& e) {
        send_error(res, e.status, e.error, e.category, e.detail);
      } catch (const Error& e) {
        send_error(res, status_for(e.category()), "request failed", to_string(e.category()),
                   e.what());
      } catch (const nlohmann::json::exception& e) {
        send_error(res, 400, "malformed body", "invalid-input", e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal error", "internal", e.what());
      }
    };
  };

  server.set_default_headers({{"Access-Control-Allow-Origin", impl->config.cors_origin},
                              {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Post("/datasets", wrap(&Impl::create_dataset));
  server.Post("/sessions", wrap(&Impl::create_session));
  server.Get(R"(/sessions/([^/]+))", wrap(&Impl::status));
  server.Get(R"(/sessions/([^/]+)/schema)", wrap(&Impl::schema));
  server.Get(R"(/sessions/([^/]+)/biclusters)", wrap(&Impl::biclusters));
  server.Post(R"(/sessions/([^/]+)/evaluate/full-path)", wrap(&Impl::full_path));
  server.Post(R"(/sessions/([^/]+)/evaluate/stepwise)", wrap(&Impl::stepwise));
  server.Post(R"(/sessions/([^/]+)/mark-known)", wrap(&Impl::mark_known));
  server.Get(R"(/sessions/([^/]+)/jobs/([^/]+))", wrap(&Impl::job));
  server.Get(R"(/sessions/([^/]+)/biclusters/([^/]+)/documents)", wrap(&Impl::documents));
  server.Post(R"(/sessions/([^/]+)/snapshot)", wrap(&Impl::snapshot));
  server.Delete(R"(/sessions/([^/]+))", wrap(&Impl::remove));
  server.Get(R"(/documents/([^/]+))", wrap(&Impl::document));
}

}  // namespace tilechain
