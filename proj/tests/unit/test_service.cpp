#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "causeway/dagfile.hpp"
#include "causeway/service.hpp"

#include <httplib.h>

using namespace causeway;
namespace fs = std::filesystem;

namespace {

const std::string kAssets = CAUSEWAY_ASSETS;

struct TempDir {
    fs::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = fs::temp_directory_path() /
               ("causeway-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// Workspace seeded with the pilot graph and a sample from the final model.
struct Fixture {
    TempDir dir;
    fs::path csv;
    std::unique_ptr<Workspace> ws;
    std::unique_ptr<ServiceHandle> service;
    std::unique_ptr<httplib::Client> client;

    Fixture() {
        fs::create_directories(dir.path);
        csv = dir.path / "input.csv";
        std::ofstream(csv) << table_to_csv(sample(load_scm(kAssets + "/reference-study/final.scm"), 3000, 1));
        AnalysisConfig cfg;
        cfg.replicates = 100;
        ws = std::make_unique<Workspace>(dir.path / "ws", kAssets + "/reference-study/pilot.dag", csv.string(), cfg);
        service = std::make_unique<ServiceHandle>(*ws, "127.0.0.1", 0);
        client = std::make_unique<httplib::Client>("127.0.0.1", service->port());
        client->set_read_timeout(60, 0);
    }
    ~Fixture() {
        service->stop();
        service.reset();
        ws.reset();
    }
};

Json body_of(const httplib::Result& r) {
    REQUIRE(r);
    return Json::parse(r->body);
}

}  // namespace

TEST_CASE("graph endpoints and versioned edits") {
    Fixture f;
    auto r = f.client->Get("/api/v1/graph");
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto v1 = body_of(r);
    CHECK(v1["provenance"]["graph_version"] == 1);

    r = f.client->Post("/api/v1/graph/edits",
                       R"({"edits":[{"op":"remove","source":"Traffic","target":"1stConcernWhileStuckInTraffic"},
                                    {"op":"remove","source":"1stConcernWhileStuckInTraffic","target":"RouteChoice"}]})",
                       "application/json");
    REQUIRE(r);
    CHECK(r->status == 201);
    const auto v2 = body_of(r);
    CHECK(v2["provenance"]["graph_version"] == 2);
    CHECK(v2["edges"].size() == v1["edges"].size() - 2);
    CHECK(f.ws->version() == 2);
    CHECK(fs::exists(f.ws->dir() / "graphs" / "000002.dag"));

    // old versions stay addressable
    r = f.client->Get("/api/v1/graph?version=1");
    CHECK(body_of(r)["edges"].size() == v1["edges"].size());
    r = f.client->Get("/api/v1/graph?version=9");
    REQUIRE(r);
    CHECK(r->status == 400);

    r = f.client->Post("/api/v1/graph/edits", R"({"op":"add","source":"RouteChoice","target":"Traffic"})",
                       "application/json");
    REQUIRE(r);
    CHECK(r->status == 409);
    CHECK(body_of(r)["error"]["code"] == "CycleDetected");
    CHECK(f.ws->version() == 2);

    r = f.client->Post("/api/v1/graph/edits", R"({"op":"add","source":"Age","target":"Gender"})", "application/json");
    REQUIRE(r);
    CHECK(r->status == 201);
    r = f.client->Post("/api/v1/graph/edits", R"({"op":"add","source":"Age","target":"Gender"})", "application/json");
    REQUIRE(r);
    CHECK(r->status == 409);

    r = f.client->Post("/api/v1/graph/edits", R"({"op":"flip","source":"Age","target":"Gender"})", "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);
    r = f.client->Post("/api/v1/graph/edits", "{not json", "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);
}

TEST_CASE("posting a graph with other variables is a schema conflict") {
    Fixture f;
    auto body = Json{{"dagfile", "dagfile v1\nvar A levels=a,b\n"}}.dump();
    auto r = f.client->Post("/api/v1/graph", body, "application/json");
    REQUIRE(r);
    CHECK(r->status == 409);
    CHECK(body_of(r)["error"]["code"] == "SchemaMismatch");

    const auto g = load_dag(kAssets + "/reference-study/final.dag");
    r = f.client->Post("/api/v1/graph", Json{{"dagfile", serialize_dag(g)}}.dump(), "application/json");
    REQUIRE(r);
    CHECK(r->status == 201);
    CHECK(body_of(r)["provenance"]["graph_id"] == g.identity());
}

TEST_CASE("analysis endpoints match the library documents and are cached by id") {
    Fixture f;
    auto r = f.client->Get("/api/v1/implications");
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto expected = implications_document(*f.ws->graph(), 1, *f.ws->data(), f.ws->config());
    CHECK(r->body == dump_document(expected));
    const auto id = expected["report_id"].get<std::string>();
    auto cached = f.client->Get("/api/v1/reports/" + id);
    REQUIRE(cached);
    CHECK(cached->status == 200);
    CHECK(cached->body == r->body);
    CHECK(fs::exists(f.ws->dir() / "reports" / (id + ".json")));
    auto missing = f.client->Get("/api/v1/reports/0123456789abcdef");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    r = f.client->Get("/api/v1/implications?alpha=0.05&statistic=pearson");
    REQUIRE(r);
    CHECK(body_of(r)["config"]["alpha"] == 0.05);
    CHECK(body_of(r)["config"]["statistic"] == "pearson");
    r = f.client->Get("/api/v1/implications?statistic=fisher");
    REQUIRE(r);
    CHECK(r->status == 400);

    r = f.client->Get("/api/v1/adjustment-sets?treatment=Traffic&treatment=Education&outcome=RouteChoice");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(body_of(r)["rows"].size() == 2);
    r = f.client->Get("/api/v1/adjustment-sets?treatment=Nope&outcome=RouteChoice");
    REQUIRE(r);
    CHECK(r->status == 400);
    CHECK(body_of(r)["error"]["code"] == "UnknownVariable");
}

TEST_CASE("estimate endpoint: defaults, refusal and override") {
    Fixture f;
    auto r = f.client->Post("/api/v1/estimate",
                            R"({"treatment":"SocialImpact","outcome":"RouteChoice","outcome_levels":["NearestExit"]})",
                            "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto d = body_of(r);
    CHECK(d["adjustment"]["set"] == Json::array());
    CHECK(d["adjusted"]["contrasts"].size() == 1);

    r = f.client->Post("/api/v1/estimate",
                       R"({"treatment":"EmploymentStatus","outcome":"RouteChoice","adjustment":["Age"]})",
                       "application/json");
    REQUIRE(r);
    CHECK(r->status == 422);
    CHECK(body_of(r)["error"]["code"] == "InvalidAdjustment");

    r = f.client->Post("/api/v1/estimate",
                       R"({"treatment":"EmploymentStatus","outcome":"RouteChoice","adjustment":["Age"],"override":true,"measure":"or"})",
                       "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(body_of(r)["adjustment"]["overridden"] == true);
    CHECK(body_of(r)["adjusted"]["contrasts"][0]["measure"] == "odds_ratio");
}

TEST_CASE("simulate endpoint returns csv and summary") {
    Fixture f;
    std::ifstream in(kAssets + "/confounded-triangle.scm");
    std::stringstream ss;
    ss << in.rdbuf();
    auto r = f.client->Post("/api/v1/simulate", Json{{"scm", ss.str()}, {"n", 50}, {"seed", 3}}.dump(),
                            "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto d = body_of(r);
    CHECK(d["rows"] == 50);
    CHECK(d["csv"].get<std::string>() == table_to_csv(sample(parse_scm_text(ss.str()), 50, 3)));
    r = f.client->Post("/api/v1/simulate", R"({"n": 5})", "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);
}

TEST_CASE("concurrent edits each produce a version") {
    Fixture f;
    const std::vector<std::pair<std::string, std::string>> edges{
        {"Age", "Gender"}, {"Race", "Gender"}, {"Age", "Race"}, {"Gender", "FamiliarityWithEnvironment"}};
    std::vector<std::thread> pool;
    std::atomic<int> created{0};
    for (const auto& [s, t] : edges) {
        pool.emplace_back([&, s, t] {
            httplib::Client c("127.0.0.1", f.service->port());
            auto r = c.Post("/api/v1/graph/edits", Json{{"op", "add"}, {"source", s}, {"target", t}}.dump(),
                            "application/json");
            if (r && r->status == 201) ++created;
        });
    }
    for (auto& th : pool) th.join();
    CHECK(created == 4);
    CHECK(f.ws->version() == 5);
    const auto g = f.ws->graph();
    for (const auto& [s, t] : edges) CHECK(g->has_edge(g->index_of(s), g->index_of(t)));
}

TEST_CASE("workspace lock, reopen and port conflicts") {
    TempDir dir;
    const auto pilot = kAssets + "/reference-study/pilot.dag";
    {
        Workspace ws(dir.path, pilot, std::nullopt);
        CHECK_FALSE(ws.has_data());
        CHECK_THROWS_AS(ws.data(), Error);
        try {
            Workspace second(dir.path, std::nullopt, std::nullopt);
            FAIL("expected lock conflict");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::WorkspaceLocked);
        }
        ServiceHandle a(ws, "127.0.0.1", 0);
        try {
            ServiceHandle b(ws, "127.0.0.1", a.port());
            FAIL("expected port conflict");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::PortInUse);
        }
        ws.commit(ws.graph()->without_edge("Traffic", "1stConcernWhileStuckInTraffic"));
    }
    // a stale lock from a dead process is taken over
    std::ofstream(dir.path / ".lock") << 999999999 << "\n";
    Workspace reopened(dir.path, std::nullopt, std::nullopt);
    CHECK(reopened.version() == 2);
    CHECK(reopened.graph(1)->edge_count() == reopened.graph()->edge_count() + 1);
}
