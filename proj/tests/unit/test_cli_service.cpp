#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "schemeplan/cli.hpp"
#include "schemeplan/service.hpp"

using namespace schemeplan;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string sample(const char* name) { return fixtures::sample_path(name); }

std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("schemeplan-" + tag + "-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  std::filesystem::create_directories(dir);
  return dir;
}

std::string wire_text(const char* name) { return to_wire(fixtures::load(name)).dump(); }

}  // namespace

// ---------------------------------------------------------------------------
// CLI

TEST(Cli, CheckValidAndInvalid) {
  EXPECT_EQ(invoke({"check", sample("simple_station.plan")}).code, cli::kPass);
  auto dir = temp_dir("cli");
  auto bad = (dir / "bad.plan").string();
  auto text = fixtures::slurp(sample("simple_station.plan"));
  text.erase(text.find("clear R2Y : P2 LA2"), 19);
  text.erase(text.find("normal R2Y : P2"), 16);
  std::ofstream(bad) << text;
  auto r = invoke({"check", bad, "--json"});
  EXPECT_EQ(r.code, cli::kViolations);
  auto doc = json::parse(r.out);
  EXPECT_FALSE(doc["valid"].get<bool>());
  std::filesystem::remove_all(dir);
}

TEST(Cli, UsageAndDataErrors) {
  EXPECT_EQ(invoke({}).code, cli::kUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"check", "/nonexistent/x.plan"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"verify", sample("simple_station.plan"), "--mode", "sideways"}).code, cli::kUsage);
  auto dir = temp_dir("cli");
  auto bad = (dir / "broken.plan").string();
  std::ofstream(bad) << "plan X\nunit linear L a\n";
  auto r = invoke({"check", bad});
  EXPECT_EQ(r.code, cli::kDataError);
  EXPECT_NE(r.err.find("2:"), std::string::npos) << r.err;
  std::filesystem::remove_all(dir);
}

TEST(Cli, VerifyExitCodes) {
  EXPECT_EQ(invoke({"verify", sample("simple_station.plan")}).code, cli::kPass);
  auto r = invoke({"verify", sample("simple_station_no_plat1.plan"), "--mode", "explore"});
  EXPECT_EQ(r.code, cli::kViolations);
  EXPECT_NE(r.out.find("safety: Unsafe"), std::string::npos) << r.out;
  EXPECT_EQ(invoke({"verify", sample("simple_station.plan"), "--mode", "explore", "--bound", "2"}).code, cli::kInconclusive);
}

TEST(Cli, BoundFromEnvironment) {
  ::setenv("SCHEMEPLAN_BOUND", "2", 1);
  auto r = invoke({"verify", sample("simple_station.plan"), "--mode", "explore"});
  ::unsetenv("SCHEMEPLAN_BOUND");
  EXPECT_EQ(r.code, cli::kInconclusive);
  EXPECT_EQ(invoke({"verify", sample("simple_station.plan"), "--mode", "explore"}).code, cli::kPass);
}

TEST(Cli, LemmaMode) {
  auto r = invoke({"verify", sample("simple_station.plan"), "--mode", "lemma", "--json"});
  EXPECT_EQ(r.code, cli::kPass);
  auto doc = json::parse(r.out);
  EXPECT_TRUE(doc["agree"].get<bool>());
  EXPECT_EQ(doc["reports"]["mutants"].size(), 10u);
}

TEST(Cli, RegionsAndTables) {
  auto r = invoke({"regions", sample("simple_station.plan"), "--json"});
  ASSERT_EQ(r.code, cli::kPass);
  auto doc = json::parse(r.out);
  EXPECT_EQ(doc["regions"].size(), 4u);
  auto t = invoke({"tables", sample("double_junction.plan")});
  EXPECT_EQ(t.code, cli::kPass);
  EXPECT_NE(t.out.find("route R4 : P3(p3cr,p2cl)"), std::string::npos);
}

TEST(Cli, EmitAndCompileMatchGoldens) {
  auto c = invoke({"emit-casl", sample("simple_station.plan")});
  EXPECT_EQ(c.code, cli::kPass);
  EXPECT_EQ(c.out, fixtures::slurp(fixtures::golden_path("simple_station.casl")));
  auto m = invoke({"compile-cm", sample("railway_domain.cm"), "--unicode"});
  EXPECT_EQ(m.out, fixtures::slurp(fixtures::golden_path("railway_domain.modal")));
  auto k = invoke({"compile-cm", sample("railway_domain.cm"), "--target", "casl", "--unicode"});
  EXPECT_EQ(k.out, fixtures::slurp(fixtures::golden_path("railway_domain.casl")));
}

TEST(Cli, ReplayTrace) {
  auto r = invoke({"replay", sample("simple_station.plan"), sample("two_trains.trace"), "--json"});
  EXPECT_EQ(r.code, cli::kPass) << r.err;
  auto bad = invoke({"replay", sample("simple_station_no_plat1.plan"), sample("two_trains.trace")});
  EXPECT_EQ(bad.code, cli::kPass);
}

// ---------------------------------------------------------------------------
// Service handler

class ServiceTest : public ::testing::Test {
 protected:
  std::chrono::steady_clock::time_point now{};
  Service svc{ServiceConfig{}, [this] { return now; }};

  Response call(const std::string& method, const std::string& path, const std::string& body = "",
                Service::Query q = {}) {
    return svc.handle(method, path, q, body);
  }

  std::string create(const char* name) {
    auto r = call("POST", "/v1/plans", wire_text(name));
    EXPECT_EQ(r.status, 201) << r.body.dump();
    return r.body["id"].get<std::string>();
  }
};

TEST_F(ServiceTest, Health) {
  EXPECT_EQ(call("GET", "/healthz").status, 200);
  EXPECT_EQ(call("GET", "/v1/healthz").status, 200);
  EXPECT_EQ(call("GET", "/v1/nothing").status, 404);
}

TEST_F(ServiceTest, PlanCrud) {
  auto id = create("simple_station.plan");
  auto g = call("GET", "/v1/plans/" + id);
  ASSERT_EQ(g.status, 200);
  EXPECT_EQ(g.body["version"], 1);
  EXPECT_EQ(from_wire(g.body["plan"]), fixtures::station());
  EXPECT_EQ(call("GET", "/v1/plans").body.dump().find(id) != std::string::npos, true);

  json put{{"version", 1}, {"plan", to_wire(fixtures::load("simple_station_no_plat1.plan"))}};
  auto p = call("PUT", "/v1/plans/" + id, put.dump());
  ASSERT_EQ(p.status, 200) << p.body.dump();
  EXPECT_EQ(p.body["version"], 2);
  EXPECT_EQ(call("PUT", "/v1/plans/" + id, put.dump()).status, 409);
  EXPECT_EQ(call("PUT", "/v1/plans/" + id, to_wire(fixtures::station()).dump()).status, 400);
  EXPECT_EQ(call("PUT", "/v1/plans/plan-99", put.dump()).status, 404);
  EXPECT_EQ(call("PATCH", "/v1/plans/" + id).status, 405);

  EXPECT_EQ(call("DELETE", "/v1/plans/" + id, "", {{"version", "1"}}).status, 409);
  EXPECT_EQ(call("DELETE", "/v1/plans/" + id).status, 204);
  EXPECT_EQ(call("GET", "/v1/plans/" + id).status, 404);
}

TEST_F(ServiceTest, InvalidPlansRejectedUnlessForced) {
  auto plan = fixtures::station();
  plan.control.erase(RouteId("R1Y"));
  auto r = call("POST", "/v1/plans", to_wire(plan).dump());
  EXPECT_EQ(r.status, 422);
  EXPECT_FALSE(r.body["violations"].empty());
  auto f = call("POST", "/v1/plans", to_wire(plan).dump(), {{"force", "1"}});
  ASSERT_EQ(f.status, 201);
  auto id = f.body["id"].get<std::string>();
  EXPECT_EQ(call("POST", "/v1/plans/" + id + "/verify", "{}").status, 422);
  EXPECT_EQ(call("POST", "/v1/plans", "{not json").status, 400);
  EXPECT_EQ(call("POST", "/v1/plans", R"({"formatVersion":1})").status, 400);
}

TEST_F(ServiceTest, GenerateTablesBumpsVersion) {
  auto plan = fixtures::load("double_junction.plan");
  auto r = call("POST", "/v1/plans", to_wire(plan).dump());
  ASSERT_EQ(r.status, 201) << r.body.dump();
  auto id = r.body["id"].get<std::string>();
  auto g = call("POST", "/v1/plans/" + id + "/tables:generate");
  ASSERT_EQ(g.status, 200) << g.body.dump();
  EXPECT_EQ(g.body["version"], 2);
  EXPECT_EQ(from_wire(g.body["plan"]), fixtures::benchmark("double_junction.plan"));
}

TEST_F(ServiceTest, VerifyMatchesCli) {
  auto id = create("simple_station_no_plat1.plan");
  for (const char* mode : {"static", "explore", "both", "lemma"}) {
    auto r = call("POST", "/v1/plans/" + id + "/verify", json{{"mode", mode}}.dump());
    ASSERT_EQ(r.status, 200) << r.body.dump();
    auto c = invoke({"verify", sample("simple_station_no_plat1.plan"), "--mode", mode, "--json"});
    EXPECT_EQ(json::parse(c.out), r.body) << mode;
  }
  auto bad = call("POST", "/v1/plans/" + id + "/verify", R"({"mode":"sideways"})");
  EXPECT_EQ(bad.status, 400);
  auto bounded = call("POST", "/v1/plans/" + create("simple_station.plan") + "/verify", R"({"mode":"explore","bound":2})");
  EXPECT_EQ(bounded.body["safety"], "Inconclusive");
}

TEST_F(ServiceTest, Regions) {
  auto id = create("simple_station.plan");
  auto r = call("GET", "/v1/plans/" + id + "/regions");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["regions"].size(), 4u);
  EXPECT_EQ(r.body["routes"]["RX1"], json({"RG1", "RG2"}));
}

TEST_F(ServiceTest, SimulationStepsAndUndo) {
  auto id = create("simple_station.plan");
  auto s = call("POST", "/v1/plans/" + id + "/sim");
  ASSERT_EQ(s.status, 201);
  auto sid = s.body["sid"].get<std::string>();
  auto base = "/v1/plans/" + id + "/sim/" + sid;
  EXPECT_EQ(s.body["enabled"].size(), 4u);

  json ev{{"event", {{"kind", "extend"}, {"from", json::array()}, {"route", "RX1"}}}};
  auto a = call("POST", base + "/step", ev.dump());
  ASSERT_EQ(a.status, 200) << a.body.dump();
  EXPECT_EQ(a.body["regions"], json::parse(R"([["RG1","RG2"]])"));
  EXPECT_EQ(a.body["step"], 1);

  json blocked{{"event", {{"kind", "extend"}, {"from", json::array()}, {"route", "RX2"}}}};
  EXPECT_EQ(call("POST", base + "/step", blocked.dump()).status, 409);
  EXPECT_EQ(call("POST", base + "/step", R"({"index":99})").status, 409);

  auto b = call("POST", base + "/undo");
  ASSERT_EQ(b.status, 200);
  EXPECT_EQ(b.body["step"], 0);
  EXPECT_EQ(call("POST", base + "/undo").status, 409);
  EXPECT_EQ(call("GET", base).status, 200);
  EXPECT_EQ(call("DELETE", base).status, 204);
  EXPECT_EQ(call("GET", base).status, 404);
}

TEST_F(ServiceTest, BusySessionGives409) {
  auto id = create("simple_station.plan");
  auto sid = call("POST", "/v1/plans/" + id + "/sim").body["sid"].get<std::string>();
  auto session = svc.session(sid);
  ASSERT_TRUE(session);
  std::unique_lock hold(session->mu);
  json busy;
  std::thread t([&] { busy = call("POST", "/v1/plans/" + id + "/sim/" + sid + "/step", R"({"index":0})").body; });
  t.join();
  EXPECT_EQ(busy["error"], "session is busy");
  hold.unlock();
  EXPECT_EQ(call("POST", "/v1/plans/" + id + "/sim/" + sid + "/step", R"({"index":0})").status, 200);
}

TEST_F(ServiceTest, IdleSessionsExpire) {
  auto id = create("simple_station.plan");
  auto sid = call("POST", "/v1/plans/" + id + "/sim").body["sid"].get<std::string>();
  now += std::chrono::seconds(1000);
  EXPECT_EQ(call("GET", "/v1/plans/" + id + "/sim/" + sid).status, 200);
  now += std::chrono::seconds(1799);
  EXPECT_EQ(svc.session_count(), 1u);
  now += std::chrono::seconds(2);
  EXPECT_EQ(call("GET", "/v1/plans/" + id + "/sim/" + sid).status, 404);
  EXPECT_EQ(svc.session_count(), 0u);
}

TEST(PlanStore, PersistsAcrossInstances) {
  auto dir = temp_dir("store");
  std::string id;
  {
    Service svc(ServiceConfig{dir, std::chrono::seconds(1800), {}, 1});
    auto r = svc.handle("POST", "/v1/plans", {}, wire_text("simple_station.plan"));
    ASSERT_EQ(r.status, 201);
    id = r.body["id"].get<std::string>();
  }
  {
    Service svc(ServiceConfig{dir, std::chrono::seconds(1800), {}, 1});
    auto r = svc.handle("GET", "/v1/plans/" + id, {}, "");
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(from_wire(r.body["plan"]), fixtures::station());
    auto again = svc.handle("POST", "/v1/plans", {}, wire_text("simple_station.plan"));
    EXPECT_NE(again.body["id"], id);
  }
  std::filesystem::remove_all(dir);
}

// ---------------------------------------------------------------------------
// Over HTTP

TEST(Http, EndToEnd) {
  Service svc;
  httplib::Server server;
  mount(server, svc);
  int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto h = client.Get("/healthz");
  ASSERT_TRUE(h);
  EXPECT_EQ(h->status, 200);

  auto c = client.Post("/v1/plans", wire_text("simple_station_no_plat1.plan"), "application/json");
  ASSERT_TRUE(c);
  ASSERT_EQ(c->status, 201);
  auto id = json::parse(c->body)["id"].get<std::string>();

  auto v = client.Post("/v1/plans/" + id + "/verify", R"({"mode":"both"})", "application/json");
  ASSERT_TRUE(v);
  EXPECT_EQ(v->status, 200);
  auto doc = json::parse(v->body);
  EXPECT_EQ(doc["safety"], "Unsafe");
  auto cx = doc["reports"]["safety"]["counterexample"];
  EXPECT_LE(cx.size(), 4u);

  auto s = client.Post("/v1/plans/" + id + "/sim", "", "application/json");
  ASSERT_TRUE(s);
  auto sid = json::parse(s->body)["sid"].get<std::string>();
  for (const auto& e : cx) {
    auto st = client.Post("/v1/plans/" + id + "/sim/" + sid + "/step", json{{"event", e}}.dump(), "application/json");
    ASSERT_TRUE(st);
    EXPECT_EQ(st->status, 200) << st->body;
  }

  auto d = client.Delete("/v1/plans/" + id);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->status, 204);
  server.stop();
  th.join();
}
