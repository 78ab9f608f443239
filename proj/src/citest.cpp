#include "causeway/citest.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "causeway/error.hpp"
#include "causeway/parallel.hpp"
#include "causeway/report_format.hpp"

namespace causeway {

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Independent: return "Independent";
        case Verdict::Dependent: return "Dependent";
        case Verdict::Undetermined: return "Undetermined";
    }
    return "Undetermined";
}

double chi_squared_survival(double statistic, std::size_t dof) {
    if (dof == 0) return 1.0;
    if (!(statistic > 0.0)) return 1.0;
    return boost::math::gamma_q(static_cast<double>(dof) / 2.0, statistic / 2.0);
}

namespace {

struct StratumStat {
    double statistic = 0.0;
    std::size_t dof = 0;
    bool low_count = false;
};

StratumStat stratum_statistic(const ContingencyTable& t, CiStatistic kind) {
    std::vector<std::uint64_t> row_sum(t.x_levels, 0), col_sum(t.y_levels, 0);
    for (std::size_t i = 0; i < t.x_levels; ++i) {
        for (std::size_t j = 0; j < t.y_levels; ++j) {
            row_sum[i] += t.at(i, j);
            col_sum[j] += t.at(i, j);
        }
    }
    const auto rows = std::count_if(row_sum.begin(), row_sum.end(), [](auto v) { return v > 0; });
    const auto cols = std::count_if(col_sum.begin(), col_sum.end(), [](auto v) { return v > 0; });
    StratumStat s;
    if (rows < 2 || cols < 2) return s;
    s.dof = static_cast<std::size_t>((rows - 1) * (cols - 1));
    const double n = static_cast<double>(t.total());
    for (std::size_t i = 0; i < t.x_levels; ++i) {
        if (row_sum[i] == 0) continue;
        for (std::size_t j = 0; j < t.y_levels; ++j) {
            if (col_sum[j] == 0) continue;
            const double expected = static_cast<double>(row_sum[i]) * static_cast<double>(col_sum[j]) / n;
            if (expected < 5.0) s.low_count = true;
            const double observed = static_cast<double>(t.at(i, j));
            if (kind == CiStatistic::GSquared) {
                if (observed > 0) s.statistic += 2.0 * observed * std::log(observed / expected);
            } else {
                const double d = observed - expected;
                s.statistic += d * d / expected;
            }
        }
    }
    // rounding can leave a tiny negative deviance on exactly independent tables
    s.statistic = std::max(0.0, s.statistic);
    return s;
}

}  // namespace

IndependenceTestResult ci_test(const DataTable& table, std::string_view x, std::string_view y,
                               const std::vector<std::string>& z, double alpha, CiStatistic statistic) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
    }
    // canonical orientation makes the test exactly symmetric in x and y
    const bool swap = y < x;
    const std::string_view a = swap ? y : x;
    const std::string_view b = swap ? x : y;
    auto strata = stratified_counts(table, a, b, z);

    std::vector<std::uint64_t> a_total(strata.front().x_levels, 0), b_total(strata.front().y_levels, 0);
    for (const auto& t : strata) {
        for (std::size_t i = 0; i < t.x_levels; ++i) {
            for (std::size_t j = 0; j < t.y_levels; ++j) {
                a_total[i] += t.at(i, j);
                b_total[j] += t.at(i, j);
            }
        }
    }
    auto observed_levels = [](const std::vector<std::uint64_t>& v) {
        return std::count_if(v.begin(), v.end(), [](auto c) { return c > 0; });
    };
    if (observed_levels(a_total) < 2 || observed_levels(b_total) < 2) {
        throw Error(ErrorCode::DegenerateTable,
                    "fewer than two observed levels for " +
                        std::string(observed_levels(a_total) < 2 ? a : b));
    }

    IndependenceTestResult r;
    r.claim.x = std::string(x);
    r.claim.y = std::string(y);
    r.claim.z = z;
    std::sort(r.claim.z.begin(), r.claim.z.end());
    r.strata = strata.size();
    for (const auto& t : strata) {
        auto s = stratum_statistic(t, statistic);
        r.statistic += s.statistic;
        r.dof += s.dof;
        r.low_count = r.low_count || s.low_count;
    }
    if (r.dof == 0) {
        r.statistic = 0.0;
        r.p_value = 1.0;
        r.verdict = Verdict::Undetermined;
        return r;
    }
    r.p_value = chi_squared_survival(r.statistic, r.dof);
    r.verdict = r.p_value > alpha ? Verdict::Independent : Verdict::Dependent;
    return r;
}

std::vector<const TestedClaim*> ImplicationReport::violated_claims() const {
    std::vector<const TestedClaim*> out;
    for (const auto& c : claims) {
        if (c.violated) out.push_back(&c);
    }
    return out;
}

std::vector<const TestedClaim*> ImplicationReport::unsupported_edges() const {
    std::vector<const TestedClaim*> out;
    for (const auto& c : claims) {
        if (c.violated && c.kind == ClaimKind::Adjacency) out.push_back(&c);
    }
    return out;
}

bool ImplicationReport::consistent() const {
    return std::none_of(claims.begin(), claims.end(), [](const TestedClaim& c) { return c.violated; });
}

ImplicationReport test_implications(const CausalDag& g, const DataTable& table,
                                    const ImplicationOptions& options) {
    const auto& schema = table.schema();
    for (const auto& v : g.variables()) {
        auto idx = schema.find(v.name());
        if (!idx) throw Error(ErrorCode::SchemaMismatch, "data lack graph variable " + v.name());
        if (schema.variable(*idx).levels() != v.levels()) {
            throw Error(ErrorCode::SchemaMismatch, "levels of " + v.name() + " differ between graph and data");
        }
    }

    ImplicationReport report;
    report.graph_identity = g.identity();
    report.options = options;
    for (auto& q : implied_independencies(g, options.basis)) {
        TestedClaim c;
        c.kind = ClaimKind::Independence;
        c.result.claim = std::move(q);
        report.claims.push_back(std::move(c));
    }
    for (const auto& e : g.edges()) {
        TestedClaim c;
        c.kind = ClaimKind::Adjacency;
        c.edge = e;
        auto z = g.parent_names(e.target);
        std::erase(z, e.source);
        c.result.claim = {e.source, e.target, std::move(z)};
        report.claims.push_back(std::move(c));
    }

    parallel_for(report.claims.size(), options.threads, [&](std::size_t i) {
        auto& c = report.claims[i];
        try {
            c.result = ci_test(table, c.result.claim.x, c.result.claim.y, c.result.claim.z, options.alpha,
                               options.statistic);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateTable) throw;
            c.result.verdict = Verdict::Undetermined;
        }
        c.violated = c.kind == ClaimKind::Independence ? c.result.verdict == Verdict::Dependent
                                                       : c.result.verdict == Verdict::Independent;
    });
    return report;
}

std::vector<EditProposal> suggest_edits(const ImplicationReport& report) {
    std::vector<EditProposal> out;
    for (const auto* c : report.unsupported_edges()) {
        EditProposal p;
        p.remove = *c->edge;
        p.evidence = c->result;
        p.summary = "remove " + p.remove.source + " -> " + p.remove.target + " (" +
                    to_string(c->result.claim) + ", " + format_p_value(c->result.p_value) + ")";
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace causeway
