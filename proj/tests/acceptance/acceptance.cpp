// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance <path-to-causeway-cli> [criterion]
//
// Exit status is non-zero when any criterion that ran failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "causeway/app.hpp"
#include "causeway/dagfile.hpp"
#include "causeway/parallel.hpp"
#include "causeway/report_format.hpp"
#include "causeway/service.hpp"
#include "support/oracles.hpp"

#include <httplib.h>

using namespace causeway;
namespace fs = std::filesystem;

namespace {

const std::string kAssets = CAUSEWAY_ASSETS;
std::string g_cli;

struct Outcome {
    bool pass = false;
    std::string detail;
    std::vector<std::string> info;
};

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------------------

Outcome dsep_equivalence() {
    std::size_t queries = 0, mismatches = 0, graphs = 0;
    auto check_graph = [&](const oracle::SmallDag& d) {
        ++graphs;
        const auto g = oracle::to_causal(d);
        const auto de = oracle::descendant_table(d);
        for (int x = 0; x < d.n; ++x)
            for (int y = x + 1; y < d.n; ++y) {
                const auto paths = oracle::all_paths(d, x, y);
                std::vector<int> rest;
                for (int k = 0; k < d.n; ++k)
                    if (k != x && k != y) rest.push_back(k);
                for (std::uint32_t m = 0; m < (1u << rest.size()); ++m) {
                    std::vector<char> z(d.n, 0);
                    for (std::size_t b = 0; b < rest.size(); ++b)
                        if (m >> b & 1u) z[rest[b]] = 1;
                    const bool expect = oracle::all_blocked(d, paths, z, de);
                    const bool got = d_separated(g, static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                                                 NodeMask(z.begin(), z.end()));
                    ++queries;
                    if (got != expect) ++mismatches;
                }
            }
    };
    for (int n = 1; n <= 5; ++n) oracle::for_each_dag(n, check_graph);
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> density(0.15, 0.6);
    for (int i = 0; i < 1000; ++i) check_graph(oracle::random_dag(7, density(rng), rng));
    return {mismatches == 0,
            std::to_string(mismatches) + " mismatches over " + std::to_string(queries) + " queries on " +
                std::to_string(graphs) + " graphs"};
}

Outcome backdoor_correctness() {
    std::mt19937_64 rng(777);
    std::uniform_int_distribution<int> size(3, 8);
    std::uniform_real_distribution<double> density(0.2, 0.6);
    std::size_t pairs = 0, mismatches = 0;
    for (int i = 0; i < 500; ++i) {
        const auto d = oracle::random_dag(size(rng), density(rng), rng);
        const auto g = oracle::to_causal(d);
        for (int x = 0; x < d.n; ++x)
            for (int y = 0; y < d.n; ++y) {
                if (x == y) continue;
                ++pairs;
                if (minimal_adjustment_sets(g, oracle::node_name(x), oracle::node_name(y)) !=
                    oracle::minimal_backdoor_sets(d, x, y)) {
                    ++mismatches;
                }
            }
    }
    const auto ref = load_dag(kAssets + "/reference-study/final.dag");
    const auto emp = minimal_adjustment_sets(ref, "EmploymentStatus", "RouteChoice");
    const auto edu = minimal_adjustment_sets(ref, "Education", "RouteChoice");
    const AdjustmentSet age_gender{"Age", "Gender"};
    const AdjustmentSet age_gender_race{"Age", "Gender", "Race"};
    const bool certified = satisfies_backdoor(ref, "EmploymentStatus", "RouteChoice", age_gender) &&
                           std::find(emp.begin(), emp.end(), age_gender) != emp.end();
    const bool education = std::find(edu.begin(), edu.end(), age_gender_race) != edu.end();
    const bool collider_rejected =
        !satisfies_backdoor(ref, "EmploymentStatus", "RouteChoice", {"1stConcernWhileStuckInTraffic", "Age", "Gender"});
    const bool mediator_rejected = !satisfies_backdoor(ref, "EmploymentStatus", "RouteChoice", {"Age", "Gender", "Urgency"});
    std::ostringstream detail;
    detail << mismatches << " mismatches over " << pairs << " ordered pairs; reference graph: {Age, Gender} "
           << (certified ? "certified" : "NOT certified") << ", {Age, Gender, Race} for Education "
           << (education ? "present" : "MISSING") << ", collider set " << (collider_rejected ? "rejected" : "ACCEPTED")
           << ", mediator set " << (mediator_rejected ? "rejected" : "ACCEPTED");
    return {mismatches == 0 && certified && education && collider_rejected && mediator_rejected, detail.str()};
}

// Z1 (3 levels) and Z2 (2 levels) drive both X and Y (3 levels each); X ⊥ Y | Z1, Z2.
ScmSpec null_model() {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.3, 1.0);
    auto row = [&](std::size_t k) {
        std::vector<double> r(k);
        double s = 0;
        for (auto& v : r) s += (v = u(rng));
        for (auto& v : r) v /= s;
        return r;
    };
    std::vector<Variable> vars{Variable("Z1", {"a", "b", "c"}), Variable("Z2", {"a", "b"}),
                               Variable("X", {"a", "b", "c"}), Variable("Y", {"a", "b", "c"})};
    auto g = validate_dag(vars, {{"Z1", "X"}, {"Z2", "X"}, {"Z1", "Y"}, {"Z2", "Y"}});
    std::vector<Cpt> cpts;
    cpts.push_back({"Z1", {}, {}, 3, row(3)});
    cpts.push_back({"Z2", {}, {}, 2, row(2)});
    for (const char* child : {"X", "Y"}) {
        Cpt c{child, {"Z1", "Z2"}, {3, 2}, 3, {}};
        for (int r = 0; r < 6; ++r) {
            auto p = row(3);
            c.table.insert(c.table.end(), p.begin(), p.end());
        }
        cpts.push_back(std::move(c));
    }
    return ScmSpec(std::move(g), std::move(cpts));
}

Outcome ci_calibration() {
    const auto m = null_model();
    const std::size_t reps = 2000;
    std::vector<char> rejected(reps, 0);
    parallel_for(reps, workers(), [&](std::size_t r) {
        const auto t = sample(m, 1000, 5000 + r);
        rejected[r] = ci_test(t, "X", "Y", {"Z1", "Z2"}, 0.01).verdict == Verdict::Dependent;
    });
    const double rate = static_cast<double>(std::count(rejected.begin(), rejected.end(), 1)) / reps;
    return {rate >= 0.005 && rate <= 0.015,
            "G2 rejection rate " + fmt("%.2f", rate * 100) + "% over 2000 null replications at alpha=0.01"};
}

Outcome pilot_surgery() {
    const auto m = load_scm(kAssets + "/reference-study/final.scm");
    const auto pilot = load_dag(kAssets + "/reference-study/pilot.dag");
    const auto fin = load_dag(kAssets + "/reference-study/final.dag");
    ImplicationOptions opt;
    opt.threads = workers();
    const auto t = sample(m, 10000, 1);
    const auto p = test_implications(pilot, t, opt);
    const auto f = test_implications(fin, t, opt);
    bool flagged = false;
    std::string unsupported;
    for (const auto* c : p.unsupported_edges()) {
        if (c->edge->source == "1stConcernWhileStuckInTraffic" && c->edge->target == "RouteChoice") flagged = true;
        unsupported += (unsupported.empty() ? "" : ", ") + c->edge->source + " -> " + c->edge->target;
    }
    std::ostringstream detail;
    detail << "pilot " << (p.consistent() ? "Consistent" : "Inconsistent") << " (unsupported: " << unsupported
           << "); final " << (f.consistent() ? "Consistent" : "Inconsistent");
    for (const auto* c : f.violated_claims()) {
        detail << "; final violation " << to_string(c->result.claim) << " " << format_p_value(c->result.p_value);
    }

    Outcome out{flagged && !p.consistent() && f.consistent(), detail.str(), {}};

    std::size_t consistent = 0, independence = 0;
    const std::size_t seeds = 50;
    for (std::uint64_t s = 1; s <= seeds; ++s) {
        const auto r = test_implications(fin, sample(m, 10000, s), opt);
        consistent += r.consistent();
        independence = static_cast<std::size_t>(std::count_if(
            r.claims.begin(), r.claims.end(), [](const TestedClaim& c) { return c.kind == ClaimKind::Independence; }));
    }
    out.info.push_back("final graph Consistent at " + std::to_string(consistent) + " of " + std::to_string(seeds) +
                       " seeds; a calibrated test over " + std::to_string(independence) +
                       " independence claims would give about " +
                       fmt("%.0f", 100.0 * std::pow(0.99, static_cast<double>(independence))) + "%");
    return out;
}

Outcome ipw_recovery() {
    const auto m = load_scm(kAssets + "/confounded-triangle.scm");
    const auto truth = oracle_effect(m, "X", "Y", {"y1"}, "x1", "x0").risk_ratio;
    EstimatorConfig cfg;
    cfg.threads = workers();
    const auto main = estimate_effect(sample(m, 10000, 1), "X", "Y", {"Z"}, cfg, &m.graph());
    const double rr = main.contrasts.front().risk_ratio;
    const bool close = std::abs(rr / truth - 1.0) <= 0.10;

    const std::size_t seeds = 100;
    std::vector<char> better(seeds, 0);
    std::vector<double> mean_weight(seeds, 0);
    parallel_for(seeds, workers(), [&](std::size_t s) {
        const auto t = sample(m, 10000, 100 + s);
        const auto adj = point_estimate(t, "X", "Y", {"y1"}, {"Z"}, cfg);
        const auto crude = point_estimate(t, "X", "Y", {"y1"}, {}, cfg);
        better[s] = std::abs(adj.risk_ratio[0] - truth) < std::abs(crude.risk_ratio[0] - truth);
        mean_weight[s] = adj.weights.diagnostics.mean;
    });
    const auto wins = std::count(better.begin(), better.end(), 1);
    const auto [lo, hi] = std::minmax_element(mean_weight.begin(), mean_weight.end());
    std::ostringstream detail;
    detail << "oracle RR " << format_fixed3(truth) << ", adjusted " << format_fixed3(rr) << " ["
           << format_fixed3(main.contrasts.front().interval.low) << ", "
           << format_fixed3(main.contrasts.front().interval.high) << "]; adjusted closer in " << wins << "/" << seeds
           << " seeds";
    Outcome out{close && wins >= 95, detail.str(), {}};
    out.info.push_back("mean stabilized weight across seeds in [" + fmt("%.4f", *lo) + ", " + fmt("%.4f", *hi) +
                       "] (diagnostic range [0.97, 1.03])");
    return out;
}

Outcome logistic_correctness() {
    const Schema s({Variable("A", {"a0", "a1"}), Variable("Y", {"y0", "y1"})});
    std::vector<LevelCode> cells;
    auto add = [&](LevelCode a, LevelCode y, int k) {
        for (int i = 0; i < k; ++i) cells.insert(cells.end(), {a, y});
    };
    add(0, 1, 1000);
    add(0, 0, 3000);
    add(1, 1, 3000);
    add(1, 0, 1000);
    const auto m = fit_logistic(DataTable(s, cells), "Y", {"y1"}, {"A"});
    const double odds = std::exp(m.coefficients(0, 1));
    const bool exact = std::abs(odds - 9.0) < 1e-6;

    std::mt19937_64 rng(4242);
    std::uniform_int_distribution<int> n_rows(150, 600);
    std::normal_distribution<double> coef(0.0, 0.8);
    std::uniform_real_distribution<double> u(0.0, 1.0), wd(0.5, 2.0);
    const Schema s3({Variable("A", {"a0", "a1", "a2"}), Variable("B", {"b0", "b1"}), Variable("Y", {"y0", "y1"})});
    double worst = 0.0;
    for (int d = 0; d < 50; ++d) {
        const double b0 = coef(rng), a1 = coef(rng), a2 = coef(rng), b1 = coef(rng);
        const int n = n_rows(rng);
        std::vector<LevelCode> c;
        std::vector<std::vector<double>> x;
        std::vector<double> y, w;
        for (int i = 0; i < n; ++i) {
            const int a = static_cast<int>(u(rng) * 3), b = u(rng) < 0.5;
            const double eta = b0 + (a == 1) * a1 + (a == 2) * a2 + b * b1;
            const int out = u(rng) < 1.0 / (1.0 + std::exp(-eta));
            c.insert(c.end(), {static_cast<LevelCode>(a), static_cast<LevelCode>(b), static_cast<LevelCode>(out)});
            x.push_back({1.0, a == 1 ? 1.0 : 0.0, a == 2 ? 1.0 : 0.0, b ? 1.0 : 0.0});
            y.push_back(out);
            w.push_back(wd(rng));
        }
        const auto fit = fit_logistic(DataTable(s3, c), "Y", {"y1"}, {"A", "B"}, w);
        const auto ref = oracle::gradient_logit(x, y, w, kRidge);
        for (std::size_t j = 0; j < ref.size(); ++j) {
            worst = std::max(worst, std::abs(fit.coefficients(0, static_cast<Eigen::Index>(j)) - ref[j]));
        }
    }
    std::ostringstream detail;
    detail << "2x2 odds ratio " << format_exact(odds) << " (target 9, |error| " << fmt("%.1e", std::abs(odds - 9.0))
           << "); max |Newton - gradient| coefficient gap over 50 datasets " << fmt("%.1e", worst);
    return {exact && worst < 1e-4, detail.str()};
}

Outcome bootstrap_coverage() {
    const auto m = load_scm(kAssets + "/confounded-triangle.scm");
    const auto truth = oracle_effect(m, "X", "Y", {"y1"}, "x1", "x0").risk_ratio;
    const std::size_t draws = 200;
    std::vector<char> covered(draws, 0);
    parallel_for(draws, workers(), [&](std::size_t d) {
        EstimatorConfig cfg;
        cfg.replicates = 200;
        cfg.seed = 9000 + d;
        const auto r = estimate_effect(sample(m, 2000, 3000 + d), "X", "Y", {"Z"}, cfg);
        const auto& iv = r.contrasts.front().interval;
        covered[d] = iv.low <= truth && truth <= iv.high;
    });
    const double rate = static_cast<double>(std::count(covered.begin(), covered.end(), 1)) / draws;
    return {rate >= 0.88 && rate <= 0.99,
            "95% percentile intervals covered the oracle RR in " + fmt("%.1f", rate * 100) + "% of 200 draws"};
}

// ---------------------------------------------------------------------------
// CLI determinism and CLI/HTTP parity

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& args, const fs::path& stdout_file) {
    const std::string cmd = "'" + g_cli + "' " + args + " > '" + stdout_file.string() + "' 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

struct Scenario {
    std::string name;
    std::string graph;
    std::string scm;
    std::size_t rows;
    std::vector<std::string> treatments;
    std::string outcome;
    std::string outcome_level;
};

std::string q(const std::string& s) { return "'" + s + "'"; }

Outcome determinism_parity() {
    const auto tmp = fs::temp_directory_path() / ("causeway-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    const std::vector<std::string> study{"Traffic", "SocialImpact", "Urgency", "EmploymentStatus", "Education"};
    const std::vector<Scenario> suite{
        {"reference-pilot", kAssets + "/reference-study/pilot.dag", kAssets + "/reference-study/final.scm", 10000,
         study, "RouteChoice", "NearestExit"},
        {"reference-final", kAssets + "/reference-study/final.dag", kAssets + "/reference-study/final.scm", 10000,
         study, "RouteChoice", "NearestExit"},
        {"confounded-triangle", kAssets + "/confounded-triangle.scm", kAssets + "/confounded-triangle.scm", 10000,
         {"X"}, "Y", "y1"},
        {"collider-trap", kAssets + "/collider-trap.scm", kAssets + "/collider-trap.scm", 5000, {"X"}, "Y", ""},
    };

    std::size_t compared = 0;
    std::vector<std::string> problems;
    auto expect_same = [&](const std::string& what, const std::string& a, const std::string& b) {
        ++compared;
        if (a != b || a.empty()) problems.push_back(what);
    };

    for (const auto& sc : suite) {
        const auto dir = tmp / sc.name;
        fs::create_directories(dir);
        const auto data = dir / "data.csv";
        const auto data2 = dir / "data2.csv";
        run("simulate " + q(sc.scm) + " -n " + std::to_string(sc.rows) + " --seed 1 --out " + q(data.string()),
            dir / "sim.out");
        run("simulate " + q(sc.scm) + " -n " + std::to_string(sc.rows) + " --seed 1 --threads 4 --out " +
                q(data2.string()),
            dir / "sim2.out");
        expect_same(sc.name + " simulate", slurp(data), slurp(data2));

        // every command twice; documents and stdout must match byte for byte
        std::vector<std::pair<std::string, std::string>> commands;  // (label, args without --out)
        commands.emplace_back("validate", "validate " + q(sc.graph));
        commands.emplace_back("implications", "implications " + q(sc.graph) + " " + q(data.string()));
        for (const auto& t : sc.treatments) {
            commands.emplace_back("adjust-" + t, "adjust " + q(sc.graph) + " --treatment " + t + " --outcome " + sc.outcome);
            std::string est = "estimate " + q(sc.graph) + " " + q(data.string()) + " --treatment " + t +
                              " --outcome " + sc.outcome + " --compare-unadjusted";
            if (!sc.outcome_level.empty()) est += " --outcome-level " + sc.outcome_level;
            commands.emplace_back("estimate-" + t, est);
        }
        for (const auto& [label, args] : commands) {
            const auto a = dir / (label + ".a.json"), b = dir / (label + ".b.json");
            run(args + " --out " + q(a.string()), dir / (label + ".a.txt"));
            run(args + " --threads 3 --out " + q(b.string()), dir / (label + ".b.txt"));
            expect_same(sc.name + " " + label + " document", slurp(a), slurp(b));
            expect_same(sc.name + " " + label + " text", slurp(dir / (label + ".a.txt")), slurp(dir / (label + ".b.txt")));
        }

        // the same requests over HTTP against a workspace seeded with the same inputs
        try {
            Workspace ws(dir / "workspace", sc.graph, data.string());
            ServiceHandle service(ws, "127.0.0.1", 0);
            httplib::Client client("127.0.0.1", service.port());
            client.set_read_timeout(300, 0);
            auto fetch = [&](const httplib::Result& r) { return r ? r->body : std::string(); };
            expect_same(sc.name + " implications over HTTP", fetch(client.Get("/api/v1/implications")),
                        slurp(dir / "implications.a.json"));
            for (const auto& t : sc.treatments) {
                expect_same(sc.name + " adjust " + t + " over HTTP",
                            fetch(client.Get("/api/v1/adjustment-sets?treatment=" + t + "&outcome=" + sc.outcome)),
                            slurp(dir / ("adjust-" + t + ".a.json")));
                Json body{{"treatment", t}, {"outcome", sc.outcome}, {"compare_unadjusted", true}};
                if (!sc.outcome_level.empty()) body["outcome_levels"] = {sc.outcome_level};
                expect_same(sc.name + " estimate " + t + " over HTTP",
                            fetch(client.Post("/api/v1/estimate", body.dump(), "application/json")),
                            slurp(dir / ("estimate-" + t + ".a.json")));
            }
            service.stop();
        } catch (const Error& e) {
            problems.push_back(sc.name + " service: " + e.what());
        }
    }
    fs::remove_all(tmp);
    std::string detail = std::to_string(compared - problems.size()) + "/" + std::to_string(compared) +
                         " byte-identical comparisons across " + std::to_string(suite.size()) + " scenarios";
    for (const auto& p : problems) detail += "; differs: " + p;
    return {problems.empty(), detail};
}

struct Criterion {
    std::string key;
    std::string title;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <causeway-cli> [criterion]\n";
        return 2;
    }
    g_cli = fs::absolute(argv[1]).string();
    const std::string only = argc > 2 ? argv[2] : "";

    const std::vector<Criterion> criteria{
        {"dsep", "d-separation matches trail enumeration", dsep_equivalence},
        {"backdoor", "back-door sets match exhaustive search", backdoor_correctness},
        {"calibration", "CI test calibration under the null", ci_calibration},
        {"pilot", "pilot surgery on reference data", pilot_surgery},
        {"ipw", "IPW recovers the interventional risk ratio", ipw_recovery},
        {"logistic", "logistic fits are exact and optimal", logistic_correctness},
        {"coverage", "bootstrap interval coverage", bootstrap_coverage},
        {"parity", "deterministic CLI output and CLI/HTTP parity", determinism_parity},
    };

    bool ran = false, all_pass = true;
    for (const auto& c : criteria) {
        if (!only.empty() && only != c.key) continue;
        ran = true;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what(), {}};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (o.pass ? "PASS " : "FAIL ") << c.title << ": " << o.detail << " (" << fmt("%.1f", secs)
                  << " s)\n";
        for (const auto& line : o.info) std::cout << "INFO " << c.key << ": " << line << "\n";
        std::cout.flush();
        all_pass = all_pass && o.pass;
    }
    if (!ran) {
        std::cerr << "unknown criterion '" << only << "'\n";
        return 2;
    }
    return all_pass ? 0 : 1;
}
