#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <thread>

// Eigen first: resolv.h (via httplib) defines _res as a macro.
#include "hasod/service.hpp"

#include <httplib.h>

using namespace hasod;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  fs::path dir;
  httplib::Server server;
  std::unique_ptr<SessionService> service;
  std::thread thread;
  int port = 0;

  explicit Fixture(const std::string& name) {
    dir = fs::temp_directory_path() / ("hasod_service_" + name);
    fs::remove_all(dir);
    service = std::make_unique<SessionService>(dir);
    service->mount(server);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~Fixture() {
    server.stop();
    thread.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

Json body(const httplib::Result& r) { return Json::parse(r->body); }

std::string create(httplib::Client& c, int k, int seed) {
  auto r = c.Post("/api/sessions", Json{{"k", k}, {"seed", seed}}.dump(), "application/json");
  REQUIRE(r);
  REQUIRE(r->status == 201);
  return body(r)["id"].get<std::string>();
}

Json answers(const Json& batch, double offset = 0.0) {
  Json out = Json::array();
  for (const auto& run : batch["runs"]) {
    const auto& x = run["levels"];
    const double y = 6 * x[0].get<double>() - 3 * x[1].get<double>() + offset;
    out.push_back(Json{{"row_id", run["row_id"]}, {"y", y}});
  }
  return out;
}

}  // namespace

TEST_CASE("create, list and read sessions") {
  Fixture f("basic");
  auto c = f.client();
  auto r = c.Post("/api/sessions", R"({"k":6,"seed":42})", "application/json");
  REQUIRE(r);
  CHECK(r->status == 201);
  const Json s = body(r);
  CHECK(s["pending_run_count"] == 15);
  CHECK(s["phase"] == "AwaitP1Responses");
  CHECK(s["k"] == 6);
  CHECK(!s["created_at"].get<std::string>().empty());
  CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");
  const std::string id = s["id"];

  auto list = c.Get("/api/sessions");
  REQUIRE(list);
  CHECK(list->status == 200);
  CHECK(body(list).size() == 1);
  CHECK(body(list)[0]["id"] == id);

  auto full = c.Get("/api/sessions/" + id);
  CHECK(full->status == 200);
  CHECK(body(full)["schema_version"] == "hasod-session/1");

  auto batch = c.Get("/api/sessions/" + id + "/batch");
  CHECK(batch->status == 200);
  CHECK(body(batch)["runs"].size() == 15);

  CHECK(c.Get("/api/sessions/nothere")->status == 404);
  CHECK(c.Get("/api/sessions/nothere/batch")->status == 404);
  CHECK(c.Get("/api/sessions/" + id + "/report")->status == 409);
  CHECK(c.Get("/api/sessions/" + id + "/screening")->status == 404);
  CHECK(c.Get("/api/sessions/" + id + "/surface?x=0,0,0,0,0,0")->status == 409);
  auto pre = c.Options("/api/sessions");
  REQUIRE(pre);
  CHECK(pre->status == 204);
}

TEST_CASE("malformed requests") {
  Fixture f("malformed");
  auto c = f.client();
  CHECK(c.Post("/api/sessions", "{", "application/json")->status == 400);
  CHECK(c.Post("/api/sessions", R"({"k":6})", "text/plain")->status == 400);
  CHECK(c.Post("/api/sessions", R"({"seed":1})", "application/json")->status == 400);
  CHECK(c.Post("/api/sessions", R"({"k":1})", "application/json")->status == 400);
  CHECK(c.Post("/api/sessions", R"({"k":4,"config":{"bogus":1}})", "application/json")->status == 400);
  auto ok = c.Post("/api/sessions", R"({"k":4,"seed":2,"config":{"n3":3}})", "application/json");
  CHECK(ok->status == 201);
  const std::string id = body(ok)["id"];
  CHECK(body(c.Get("/api/sessions/" + id))["config"]["n3"] == 3);
  CHECK(c.Post("/api/sessions/" + id + "/responses", R"({"row_id":0})", "application/json")->status == 400);
  CHECK(c.Post("/api/sessions/" + id + "/responses", R"([{"row_id":0,"y":"x"}])", "application/json")->status == 400);
  CHECK(c.Post("/api/sessions/" + id + "/responses", R"([{"row_id":99,"y":1}])", "application/json")->status == 404);
}

TEST_CASE("responses drive the session to completion") {
  Fixture f("flow");
  auto c = f.client();
  const std::string id = create(c, 4, 7);
  const std::string base = "/api/sessions/" + id;

  // Partial batch, then a duplicate.
  Json first = answers(body(c.Get(base + "/batch")));
  Json part = Json::array({first[0], first[1]});
  auto r = c.Post(base + "/responses", part.dump(), "application/json");
  CHECK(r->status == 200);
  CHECK(body(r)["pending_run_count"] == 9);
  const std::string before = c.Get(base)->body;
  auto dup = c.Post(base + "/responses", Json::array({first[0]}).dump(), "application/json");
  CHECK(dup->status == 422);
  CHECK(body(dup)["error"] == "DuplicateResponse");
  CHECK(c.Get(base)->body == before);

  for (int step = 0; step < 5; ++step) {
    auto b = c.Get(base + "/batch");
    if (b->status == 409) break;
    auto p = c.Post(base + "/responses", answers(body(b)).dump(), "application/json");
    REQUIRE(p->status == 200);
    if (step == 0) {
      CHECK(c.Get(base + "/screening")->status == 200);
      CHECK(body(c.Get(base + "/screening"))["cwess"].size() == 4);
    }
  }
  auto rep = c.Get(base + "/report");
  REQUIRE(rep->status == 200);
  const Json result = body(rep);
  CHECK(result["x_star"].size() == 4);
  CHECK(result["variance_after_at_old_xstar"].get<double>() <= result["variance_before"].get<double>() + 1e-9);

  auto surf = c.Get(base + "/surface?x=0.1,0.2,-0.3,0");
  REQUIRE(surf->status == 200);
  CHECK(body(surf)["variance"].get<double>() >= 0.0);
  CHECK(c.Get(base + "/surface?x=0.1,0.2")->status == 400);
  CHECK(c.Get(base + "/surface?x=a,b,c,d")->status == 400);
  CHECK(c.Get(base + "/surface")->status == 400);
  CHECK(c.Post(base + "/responses", R"([{"row_id":0,"y":1}])", "application/json")->status == 409);

  // Durable: a new service over the same directory sees the same state.
  SessionService other(f.dir);
  CHECK(other.get(id).body == c.Get(base)->body);
}

TEST_CASE("concurrent duplicate submissions") {
  Fixture f("race");
  auto c = f.client();
  const std::string id = create(c, 6, 1);
  const std::string base = "/api/sessions/" + id;
  const Json one = Json::array({answers(body(c.Get(base + "/batch")))[3]});
  std::atomic<int> ok{0}, dup{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      httplib::Client cl("127.0.0.1", f.port);
      auto r = cl.Post(base + "/responses", one.dump(), "application/json");
      if (r && r->status == 200) ++ok;
      if (r && r->status == 422) ++dup;
    });
  }
  for (auto& t : threads) t.join();
  CHECK(ok == 1);
  CHECK(dup == 3);
  CHECK(body(c.Get(base + "/batch"))["runs"].size() == 14);
}
