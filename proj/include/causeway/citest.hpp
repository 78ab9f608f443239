#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "causeway/dag.hpp"
#include "causeway/dataset.hpp"

namespace causeway {

inline constexpr double kDefaultAlpha = 0.01;

enum class Verdict { Independent, Dependent, Undetermined };
std::string_view to_string(Verdict v);

enum class CiStatistic {
    GSquared,           // likelihood-ratio deviance
    PearsonChiSquared,  // sensitivity check
};

struct IndependenceTestResult {
    SeparationQuery claim;
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
    Verdict verdict = Verdict::Undetermined;
    /// Some tested stratum has an expected cell count below 5. Advisory only.
    bool low_count = false;
    std::size_t strata = 0;
};

/// Upper tail of the chi-squared distribution; 1 when dof is 0.
double chi_squared_survival(double statistic, std::size_t dof);

/// Stratified test of x ⊥ y | z. Within each stratum all-zero rows and
/// columns are dropped and degrees of freedom reduced to match. Throws
/// UnknownVariable, OverlappingRoles, InvalidArgument (alpha) or
/// DegenerateTable (x or y shows fewer than two levels overall).
IndependenceTestResult ci_test(const DataTable& table, std::string_view x, std::string_view y,
                               const std::vector<std::string>& z, double alpha = kDefaultAlpha,
                               CiStatistic statistic = CiStatistic::GSquared);

enum class ClaimKind {
    Independence,  // implied by a missing edge; violated when the data say Dependent
    Adjacency,     // an edge u -> v tested given pa(v) \ {u}; violated when the data say Independent
};

struct TestedClaim {
    ClaimKind kind = ClaimKind::Independence;
    IndependenceTestResult result;
    std::optional<Edge> edge;  // Adjacency claims only
    bool violated = false;
};

struct ImplicationOptions {
    double alpha = kDefaultAlpha;
    CiStatistic statistic = CiStatistic::GSquared;
    ClaimBasis basis = ClaimBasis::LocalMarkov;
    std::size_t threads = 1;
};

struct ImplicationReport {
    std::string graph_identity;
    ImplicationOptions options;
    std::vector<TestedClaim> claims;  // independence claims first, then adjacency claims

    std::vector<const TestedClaim*> violated_claims() const;
    /// Edges whose endpoints test conditionally independent.
    std::vector<const TestedClaim*> unsupported_edges() const;
    bool consistent() const;
};

/// Throws SchemaMismatch when a graph variable is missing from the table or
/// declares different levels.
ImplicationReport test_implications(const CausalDag& g, const DataTable& table,
                                    const ImplicationOptions& options = {});

struct EditProposal {
    Edge remove;
    IndependenceTestResult evidence;
    std::string summary;
};

/// One removal proposal per unsupported edge. Never touches a graph.
std::vector<EditProposal> suggest_edits(const ImplicationReport& report);

}  // namespace causeway
