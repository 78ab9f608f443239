#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "causeway/citest.hpp"
#include "causeway/error.hpp"
#include "causeway/report_format.hpp"

using namespace causeway;

namespace {

Schema xyz(std::size_t kx = 2, std::size_t ky = 2, std::size_t kz = 2) {
    auto levels = [](std::size_t k) {
        std::vector<std::string> v;
        for (std::size_t i = 0; i < k; ++i) v.push_back("l" + std::to_string(i));
        return v;
    };
    return Schema({Variable("X", levels(kx)), Variable("Y", levels(ky)), Variable("Z", levels(kz))});
}

DataTable from_rows(const Schema& s, const std::vector<std::array<LevelCode, 3>>& rows) {
    std::vector<LevelCode> cells;
    for (const auto& r : rows) cells.insert(cells.end(), r.begin(), r.end());
    return DataTable(s, cells);
}

// Expands a 2-D count table into rows with Z = 0.
DataTable from_counts(const std::vector<std::vector<int>>& counts) {
    std::vector<std::array<LevelCode, 3>> rows;
    for (std::size_t i = 0; i < counts.size(); ++i)
        for (std::size_t j = 0; j < counts[i].size(); ++j)
            for (int k = 0; k < counts[i][j]; ++k)
                rows.push_back({static_cast<LevelCode>(i), static_cast<LevelCode>(j), 0});
    return from_rows(xyz(counts.size(), counts.front().size()), rows);
}

double g2_oracle(const std::vector<std::vector<int>>& c) {
    double n = 0;
    std::vector<double> r(c.size(), 0), k(c.front().size(), 0);
    for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = 0; j < c[i].size(); ++j) {
            r[i] += c[i][j];
            k[j] += c[i][j];
            n += c[i][j];
        }
    double g = 0;
    for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = 0; j < c[i].size(); ++j)
            if (c[i][j] > 0) g += 2.0 * c[i][j] * std::log(c[i][j] * n / (r[i] * k[j]));
    return g;
}

DataTable random_independent(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::vector<std::array<LevelCode, 3>> rows;
    for (std::size_t i = 0; i < n; ++i)
        rows.push_back({static_cast<LevelCode>(coin(rng)), static_cast<LevelCode>(coin(rng)),
                        static_cast<LevelCode>(coin(rng))});
    return from_rows(xyz(), rows);
}

}  // namespace

TEST_CASE("chi-squared survival matches reference values") {
    CHECK(chi_squared_survival(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(chi_squared_survival(9.487729036781154, 4) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(chi_squared_survival(10.0, 3) == doctest::Approx(0.01856613546304325).epsilon(1e-12));
    CHECK(chi_squared_survival(0.5, 2) == doctest::Approx(0.7788007830714049).epsilon(1e-12));
    CHECK(chi_squared_survival(50.0, 10) == doctest::Approx(2.669083424904495e-07).epsilon(1e-10));
    CHECK(chi_squared_survival(1e-3, 1) == doctest::Approx(0.9747728793699604).epsilon(1e-12));
    CHECK(chi_squared_survival(7.0, 0) == 1.0);
}

TEST_CASE("G2 and Pearson statistics match hand computation") {
    const std::vector<std::vector<int>> c{{10, 20, 5}, {30, 40, 25}};
    const auto t = from_counts(c);
    const auto r = ci_test(t, "X", "Y", {});
    CHECK(r.statistic == doctest::Approx(g2_oracle(c)).epsilon(1e-12));
    CHECK(r.dof == 2);
    CHECK(r.p_value == doctest::Approx(chi_squared_survival(g2_oracle(c), 2)).epsilon(1e-12));

    // Pearson by hand for the 2x2 {{10,20},{30,40}}: n=100, E = {{12,18},{28,42}}
    const auto p = ci_test(from_counts({{10, 20}, {30, 40}}), "X", "Y", {}, 0.01, CiStatistic::PearsonChiSquared);
    const double expect = 4.0 / 12 + 4.0 / 18 + 4.0 / 28 + 4.0 / 42;
    CHECK(p.statistic == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("test is exactly symmetric in x and y") {
    for (std::uint64_t s = 1; s <= 20; ++s) {
        const auto t = random_independent(300, s);
        const auto a = ci_test(t, "X", "Y", {"Z"});
        const auto b = ci_test(t, "Y", "X", {"Z"});
        CHECK(a.statistic == b.statistic);
        CHECK(a.p_value == b.p_value);
        CHECK(a.dof == b.dof);
        CHECK(b.claim.x == "Y");
    }
}

TEST_CASE("row order does not change the result") {
    const auto t = random_independent(400, 3);
    std::vector<std::size_t> idx(t.row_count());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), std::mt19937_64(9));
    const auto shuffled = t.select_rows(idx);
    CHECK(ci_test(t, "X", "Y", {"Z"}).statistic == ci_test(shuffled, "X", "Y", {"Z"}).statistic);
}

TEST_CASE("independent fair coins are rarely rejected") {
    int independent = 0;
    for (std::uint64_t s = 0; s < 300; ++s) {
        if (ci_test(random_independent(500, 1000 + s), "X", "Y", {"Z"}).verdict == Verdict::Independent) {
            ++independent;
        }
    }
    CHECK(independent >= 291);
}

TEST_CASE("a copied column is dependent") {
    std::vector<std::array<LevelCode, 3>> rows;
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
        auto v = static_cast<LevelCode>(rng() & 1u);
        rows.push_back({v, v, static_cast<LevelCode>(rng() & 1u)});
    }
    const auto r = ci_test(from_rows(xyz(), rows), "X", "Y", {"Z"});
    CHECK(r.verdict == Verdict::Dependent);
    CHECK(r.p_value < 1e-10);
    CHECK(r.strata == 2);
}

TEST_CASE("empty rows and columns reduce degrees of freedom") {
    // 3x3 with the middle Y level never observed: dof (3-1)(2-1) = 2
    const auto r = ci_test(from_counts({{5, 0, 7}, {6, 0, 4}, {9, 0, 3}}), "X", "Y", {});
    CHECK(r.dof == 2);
    // a stratum where X is constant contributes nothing
    std::vector<std::array<LevelCode, 3>> rows{{0, 0, 0}, {0, 1, 0}, {1, 0, 0}, {1, 1, 0}, {0, 0, 1}, {0, 1, 1}};
    const auto s = ci_test(from_rows(xyz(), rows), "X", "Y", {"Z"});
    CHECK(s.dof == 1);
    CHECK(s.low_count);
}

TEST_CASE("zero total dof is undetermined, constant variable is degenerate") {
    std::vector<std::array<LevelCode, 3>> rows{{0, 0, 0}, {1, 1, 1}, {0, 1, 0}, {1, 0, 1}};
    // within each Z stratum only one X level: nothing to test
    std::vector<std::array<LevelCode, 3>> split{{0, 0, 0}, {0, 1, 0}, {1, 0, 1}, {1, 1, 1}};
    const auto r = ci_test(from_rows(xyz(), split), "X", "Y", {"Z"});
    CHECK(r.dof == 0);
    CHECK(r.p_value == 1.0);
    CHECK(r.verdict == Verdict::Undetermined);

    std::vector<std::array<LevelCode, 3>> constant{{0, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    try {
        ci_test(from_rows(xyz(), constant), "X", "Y", {});
        FAIL("expected DegenerateTable");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateTable);
    }
    CHECK_THROWS_AS(ci_test(from_rows(xyz(), rows), "X", "Y", {}, 1.5), Error);
    CHECK_THROWS_AS(ci_test(from_rows(xyz(), rows), "X", "Y", {"X"}), Error);
}

TEST_CASE("p-value formatting") {
    CHECK(format_p_value(0.504) == "p=0.504");
    CHECK(format_p_value(0.5) == "p=0.5");
    CHECK(format_p_value(1.0) == "p=1");
    CHECK(format_p_value(3.57e-10) == "p=3.57E-10");
    CHECK(format_p_value(1e-20) == "p<2.2E-16");
    CHECK(format_fixed3(6.5624) == "6.562");
    CHECK(format_exact(0.1) == "0.1");
}

TEST_CASE("implication report flags a spurious edge and proposes its removal") {
    // data: X and Y independent coins, Z irrelevant; graph claims X -> Y
    const auto t = random_independent(4000, 77);
    const auto g = validate_dag(t.schema().variables(), {{"X", "Y"}});
    const auto report = test_implications(g, t);
    const auto adjacency = std::count_if(report.claims.begin(), report.claims.end(),
                                         [](const TestedClaim& c) { return c.kind == ClaimKind::Adjacency; });
    CHECK(adjacency == 1);
    CHECK(report.claims.back().kind == ClaimKind::Adjacency);
    const auto unsupported = report.unsupported_edges();
    REQUIRE(unsupported.size() == 1);
    CHECK(unsupported.front()->edge->source == "X");
    const auto proposals = suggest_edits(report);
    REQUIRE(proposals.size() == 1);
    CHECK(proposals.front().summary.rfind("remove X -> Y", 0) == 0);
    CHECK_FALSE(report.consistent());

    const auto empty = validate_dag(t.schema().variables(), {});
    CHECK(test_implications(empty, t).consistent());
    CHECK(test_implications(empty, t, ImplicationOptions{0.01, CiStatistic::GSquared, ClaimBasis::LocalMarkov, 4})
              .claims.size() == 3);
}

TEST_CASE("graph and data must share variables and levels") {
    const auto t = random_independent(50, 1);
    const auto g = make_binary_dag({"X", "Y", "W"}, {});
    CHECK_THROWS_AS(test_implications(g, t), Error);
}
