#include <doctest.h>
#include <httplib.h>

#include <chrono>
#include <filesystem>
#include <thread>

#include "tilechain/json_io.hpp"
#include "tilechain/service.hpp"

using namespace tilechain;
namespace fs = std::filesystem;

namespace {

// A service on an ephemeral port over a scratch copy of the fixtures.
class TestServer {
 public:
  TestServer() : dir_(fs::temp_directory_path() / "tilechain-api-test"), service_(config()) {
    service_.mount(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~TestServer() {
    server_.stop();
    thread_.join();
    service_.drain();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(60, 0);
    return c;
  }
  const fs::path& dir() const { return dir_; }

 private:
  ServiceConfig config() {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    for (const char* f : {"crescent.csv", "crescent.docs.json"}) {
      fs::copy_file(fs::path(TILECHAIN_FIXTURES) / f, dir_ / f);
    }
    return ServiceConfig{dir_, "*"};
  }

  fs::path dir_;
  ApiService service_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

Json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return Json::parse(r->body);
}

Json post(httplib::Client& c, const std::string& path, const Json& body, int expect) {
  auto r = c.Post(path, body.dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == expect);
  return Json::parse(r->body);
}

std::string new_session(httplib::Client& c, const std::string& mode = "binary",
                        const std::string& score = "local") {
  const Json created = post(c, "/sessions",
                            Json{{"dataset", "crescent"},
                                 {"mode", mode},
                                 {"score_kind", score},
                                 {"jaccard", 0.05},
                                 {"domains", {"Person", "Location", "Phone", "Date"}}},
                            201);
  return created["id"].get<std::string>();
}

Json wait_job(httplib::Client& c, const std::string& poll) {
  for (int k = 0; k < 600; ++k) {
    const Json j = body_of(c.Get(poll));
    if (j["status"] != "running") return j;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  FAIL("job did not finish");
  return {};
}

}  // namespace

TEST_CASE("session lifecycle over HTTP") {
  TestServer srv;
  auto c = srv.client();
  const std::string id = new_session(c);
  const std::string base = "/sessions/" + id;

  const Json handle = body_of(c.Get(base));
  CHECK(handle["id"] == id);
  CHECK(handle["status"] == "converged");
  CHECK(handle["biclusters"] == 18);
  CHECK(handle["model"] == "binary");

  const Json schema = body_of(c.Get(base + "/schema"));
  CHECK(schema["relations"].size() == 3);

  const Json bcs = body_of(c.Get(base + "/biclusters"));
  CHECK(bcs["biclusters"].size() == 18);

  const Json docs = body_of(c.Get(base + "/biclusters/r1.b0/documents"));
  CHECK(docs["documents"].size() == 8);
  const std::string doc_id = docs["documents"][0]["doc_id"];
  const Json doc = body_of(c.Get("/documents/" + doc_id));
  CHECK(doc["doc_id"] == doc_id);
  CHECK_FALSE(doc["content"].get<std::string>().empty());

  const Json snap = post(c, base + "/snapshot", Json::object(), 200);
  CHECK(fs::exists(srv.dir() / "snapshots" / (id + ".json")));
  (void)snap;

  auto del = c.Delete(base);
  REQUIRE(del);
  CHECK(del->status == 200);
  auto gone = c.Get(base);
  REQUIRE(gone);
  CHECK(gone->status == 404);
}

TEST_CASE("full-path and stepwise evaluation over HTTP") {
  TestServer srv;
  auto c = srv.client();
  const std::string base = "/sessions/" + new_session(c);

  const Json full = post(c, base + "/evaluate/full-path", Json{{"seed", "r1.b0"}}, 200);
  REQUIRE_FALSE(full["chains"].empty());
  CHECK(full["chains"][0]["members"] == Json{"r0.b5", "r1.b0", "r2.b0"});
  CHECK(full["chains"][0]["rank"] == 1);

  const Json step = post(c, base + "/evaluate/stepwise", Json{{"seed", "r1.b0"}}, 200);
  REQUIRE_FALSE(step["neighbors"].empty());
  for (const auto& n : step["neighbors"]) {
    CHECK(n["opacity"].get<double>() >= 0.0);
    CHECK(n["opacity"].get<double>() <= 1.0);
  }
}

TEST_CASE("global evaluations run as polled jobs") {
  TestServer srv;
  auto c = srv.client();
  const std::string base = "/sessions/" + new_session(c);
  const Json started =
      post(c, base + "/evaluate/full-path", Json{{"seed", "r1.b0"}, {"score_kind", "global"}}, 202);
  CHECK(started["status"] == "running");
  const Json done = wait_job(c, started["poll"]);
  REQUIRE(done["status"] == "done");
  const auto& chains = done["result"]["chains"];
  REQUIRE_FALSE(chains.empty());
  CHECK(chains[0]["score"]["score_kind"] == "global");
  CHECK(chains[0]["score"]["value"].get<double>() >= 0.0);

  auto missing = c.Get(base + "/jobs/j999");
  REQUIRE(missing);
  CHECK(missing->status == 404);
}

TEST_CASE("mark-known lowers the top chain score") {
  TestServer srv;
  auto c = srv.client();
  const std::string base = "/sessions/" + new_session(c);
  const Json before = post(c, base + "/evaluate/full-path", Json{{"seed", "r1.b0"}}, 200);
  const auto top = before["chains"][0];
  const Json marked = post(c, base + "/mark-known", Json{{"pattern_ids", top["members"]}}, 200);
  CHECK(marked["changed"] == true);
  CHECK(marked["known_tiles"].get<int>() > 0);
  CHECK(marked["status"] == "converged");

  const Json after = post(c, base + "/evaluate/full-path", Json{{"seed", "r1.b0"}}, 200);
  bool found = false;
  for (const auto& ch : after["chains"]) {
    if (ch["id"] != top["id"]) continue;
    found = true;
    CHECK(ch["score"]["value"].get<double>() < top["score"]["value"].get<double>());
  }
  CHECK(found);
  const Json again = post(c, base + "/mark-known", Json{{"pattern_ids", top["members"]}}, 200);
  CHECK(again["changed"] == false);
}

TEST_CASE("a session running a job rejects updates with 409") {
  TestServer srv;
  auto c = srv.client();
  const std::string base = "/sessions/" + new_session(c, "real");
  // The job and the update race; retry until the update lands mid-job.
  bool saw_conflict = false;
  for (int attempt = 0; attempt < 20 && !saw_conflict; ++attempt) {
    const Json started = post(c, base + "/evaluate/full-path",
                              Json{{"seed", "r1.b2"}, {"score_kind", "global"}}, 202);
    auto r = c.Post(base + "/mark-known", Json{{"pattern_ids", Json::array()}}.dump(),
                    "application/json");
    REQUIRE(r);
    CHECK((r->status == 409 || r->status == 200));
    if (r->status == 409) {
      saw_conflict = true;
      const Json err = Json::parse(r->body);
      CHECK(err["category"] == "busy");
    }
    CHECK(wait_job(c, started["poll"])["status"] == "done");
  }
  CHECK(saw_conflict);
  // Once the job is done the session accepts work again.
  post(c, base + "/mark-known", Json{{"pattern_ids", Json::array()}}, 200);
}

TEST_CASE("API errors map to status codes") {
  TestServer srv;
  auto c = srv.client();
  auto r = c.Get("/sessions/s404");
  REQUIRE(r);
  CHECK(r->status == 404);
  CHECK(Json::parse(r->body)["category"] == "not-found");

  r = c.Post("/sessions", "{not json", "application/json");
  REQUIRE(r);
  CHECK(r->status == 400);

  post(c, "/sessions", Json{{"dataset", "no-such-data"}}, 404);
  post(c, "/sessions", Json{{"dataset", "../etc/passwd"}}, 400);
  post(c, "/sessions", Json{{"dataset", "crescent"}, {"domains", {"Person", "Weapon"}}}, 400);

  const std::string base = "/sessions/" + new_session(c);
  post(c, base + "/evaluate/full-path", Json{{"seed", "r9.b9"}}, 404);
  post(c, base + "/evaluate/full-path", Json::object(), 400);
  post(c, base + "/mark-known", Json{{"pattern_ids", {"r9.b9"}}}, 404);
  r = c.Get("/documents/no-such-doc");
  REQUIRE(r);
  CHECK(r->status == 404);
}

TEST_CASE("uploaded datasets and CORS") {
  TestServer srv;
  auto c = srv.client();
  Json records = Json::array();
  for (int d = 0; d < 4; ++d) {
    records.push_back({{"doc_id", "n" + std::to_string(d)}, {"entity", "ann"}, {"domain", "Person"}});
    records.push_back(
        {{"doc_id", "n" + std::to_string(d)}, {"entity", "oslo"}, {"domain", "Location"}});
  }
  const Json up = post(c, "/datasets",
                       Json{{"name", "tiny"}, {"records", records}, {"documents", {{"n0", "text"}}}},
                       201);
  CHECK(up["documents"] == 4);
  const Json s = post(c, "/sessions", Json{{"dataset", "tiny"}, {"min_support", 1}}, 201);
  CHECK(s["biclusters"] == 1);
  post(c, "/datasets", Json{{"name", "bad"}, {"records", 3}}, 400);

  auto r = c.Get("/sessions/" + s["id"].get<std::string>());
  REQUIRE(r);
  CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");
  auto opt = c.Options("/sessions");
  REQUIRE(opt);
  CHECK(opt->status == 204);
}
