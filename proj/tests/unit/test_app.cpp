#include <doctest.h>

#include "causeway/app.hpp"
#include "causeway/dagfile.hpp"

using namespace causeway;

namespace {

const std::string kAssets = CAUSEWAY_ASSETS;

AnalysisConfig quick() {
    AnalysisConfig c;
    c.replicates = 100;
    return c;
}

}  // namespace

TEST_CASE("every document carries the common header") {
    const auto m = load_scm(kAssets + "/confounded-triangle.scm");
    const auto t = sample(m, 800, 1);
    EstimateRequest req;
    req.treatment = "X";
    req.outcome = "Y";
    const std::vector<Json> docs{graph_document(m.graph(), 1), validate_document(m.graph(), 1),
                                 implications_document(m.graph(), 1, t, quick()),
                                 adjustment_document(m.graph(), 1, {"X"}, "Y", quick()),
                                 estimate_document(m.graph(), 1, t, req, quick()), simulate_document(m, 800, 1, t)};
    for (const auto& d : docs) {
        CHECK(d.contains("format"));
        CHECK(d["tool_version"] == std::string(kToolVersion));
        CHECK(d["report_id"].get<std::string>().size() == 16);
        CHECK(d.contains("provenance"));
        CHECK_FALSE(render_text(d).empty());
    }
    CHECK(docs[0]["provenance"]["graph_id"] == m.graph().identity());
    CHECK(docs[2]["provenance"]["config_hash"] == config_hash(quick()));
    const auto err = error_document(Error(ErrorCode::CycleDetected, "boom", 4));
    CHECK(err["tool_version"] == std::string(kToolVersion));
    CHECK(err["error"]["line"] == 4);
}

TEST_CASE("report ids depend on the request and configuration") {
    const auto g = load_dag(kAssets + "/reference-study/final.dag");
    const auto a = adjustment_document(g, 1, {"Traffic"}, "RouteChoice", quick());
    const auto b = adjustment_document(g, 1, {"Education"}, "RouteChoice", quick());
    auto other = quick();
    other.alpha = 0.05;
    const auto c = adjustment_document(g, 1, {"Traffic"}, "RouteChoice", other);
    const auto again = adjustment_document(g, 1, {"Traffic"}, "RouteChoice", quick());
    CHECK(a["report_id"] != b["report_id"]);
    CHECK(a["report_id"] != c["report_id"]);
    CHECK(dump_document(a) == dump_document(again));
    CHECK(config_hash(quick()) != config_hash(other));
    auto threads = quick();
    threads.threads = 8;
    CHECK(config_hash(quick()) == config_hash(threads));

    const auto m = load_scm(kAssets + "/confounded-triangle.scm");
    const auto i1 = implications_document(m.graph(), 1, sample(m, 500, 1), quick());
    const auto i2 = implications_document(m.graph(), 1, sample(m, 500, 2), quick());
    CHECK(i1["provenance"]["data_hash"] != i2["provenance"]["data_hash"]);
    CHECK(i1["report_id"] != i2["report_id"]);
}

TEST_CASE("adjustment document lists the reference study sets") {
    const auto g = load_dag(kAssets + "/reference-study/final.dag");
    const auto d = adjustment_document(g, 1, {"Traffic", "SocialImpact", "EmploymentStatus"}, "RouteChoice", quick());
    REQUIRE(d["rows"].size() == 3);
    CHECK(d["rows"][0]["minimal_sets"] == Json::parse(R"([["SocialImpact","Urgency"]])"));
    CHECK(d["rows"][1]["text"] == "∅ (no adjustment needed)");
    const auto emp = d["rows"][2]["minimal_sets"];
    CHECK(emp.size() == 2);
    CHECK(emp[0] == Json::parse(R"(["Age","Gender"])"));
    const auto text = render_text(d);
    CHECK(text.find("Age, Gender") != std::string::npos);
}

TEST_CASE("estimate document carries both methods on request") {
    const auto m = load_scm(kAssets + "/confounded-triangle.scm");
    const auto t = sample(m, 3000, 2);
    EstimateRequest req;
    req.treatment = "X";
    req.outcome = "Y";
    req.compare_unadjusted = true;
    const auto d = estimate_document(m.graph(), 1, t, req, quick());
    CHECK(d["adjustment"]["set"] == Json::parse(R"(["Z"])"));
    CHECK(d["adjustment"]["source"] == "minimal");
    CHECK(d["adjustment"]["certified"] == true);
    CHECK(d["adjusted"]["contrasts"][0]["measure"] == "risk_ratio");
    CHECK(d.contains("unadjusted"));
    const double adj = d["adjusted"]["contrasts"][0]["point"];
    const double crude = d["unadjusted"]["contrasts"][0]["point"];
    CHECK(crude > adj);
    const auto text = render_text(d);
    CHECK(text.find("X: x1 vs x0") != std::string::npos);
    CHECK(exit_code_for(d) == 0);
}

TEST_CASE("exit codes") {
    CHECK(exit_code_for(error_document(Error(ErrorCode::InvalidAdjustment, "no"))) == 1);
    CHECK(exit_code_for(error_document(Error(ErrorCode::ParseError, "no", 3))) == 2);
    Json incons{{"format", "causeway.implications/1"}, {"verdict", "Inconsistent"}};
    Json cons{{"format", "causeway.implications/1"}, {"verdict", "Consistent"}};
    CHECK(exit_code_for(incons) == 1);
    CHECK(exit_code_for(cons) == 0);
}

TEST_CASE("error document keeps code and location") {
    const auto d = error_document(Error(ErrorCode::UnknownLevel, "bad level", 0, 7, 3));
    CHECK(d["error"]["code"] == "UnknownLevel");
    CHECK(d["error"]["row"] == 7);
    CHECK(d["error"]["column"] == 3);
    CHECK(render_text(d).find("UnknownLevel") != std::string::npos);
}

TEST_CASE("study descriptor parsing") {
    const auto s = load_study(kAssets + "/reference-study/study.json");
    CHECK(s.outcome == "RouteChoice");
    CHECK(s.outcome_levels == std::vector<std::string>{"NearestExit"});
    CHECK(s.treatments.size() == 5);
    CHECK_FALSE(s.unit.empty());
    CHECK_THROWS_AS(parse_study("{\"treatments\": []}"), Error);
    CHECK_THROWS_AS(parse_study("not json"), Error);
}

TEST_CASE("implications document on the pilot graph names both pilot-only edges") {
    const auto m = load_scm(kAssets + "/reference-study/final.scm");
    const auto pilot = load_dag(kAssets + "/reference-study/pilot.dag");
    const auto t = sample(m, 10000, 1);
    const auto d = implications_document(pilot, 1, t, quick());
    CHECK(d["verdict"] == "Inconsistent");
    std::vector<std::string> removed;
    for (const auto& p : d["proposals"]) removed.push_back(p["remove"]["source"].get<std::string>() + "->" +
                                                          p["remove"]["target"].get<std::string>());
    CHECK(std::find(removed.begin(), removed.end(), "Traffic->1stConcernWhileStuckInTraffic") != removed.end());
    CHECK(std::find(removed.begin(), removed.end(), "1stConcernWhileStuckInTraffic->RouteChoice") != removed.end());
    CHECK(exit_code_for(d) == 1);
    CHECK(render_text(d).find("UNSUPPORTED") != std::string::npos);
}
