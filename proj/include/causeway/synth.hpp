#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "causeway/dag.hpp"
#include "causeway/dagfile.hpp"
#include "causeway/dataset.hpp"

namespace causeway {

/// Conditional distribution of one variable given its parents. Rows are
/// indexed mixed-radix over parent levels, first parent most significant.
struct Cpt {
    std::string child;
    std::vector<std::string> parents;
    std::vector<std::size_t> parent_levels;
    std::size_t child_levels = 0;
    std::vector<double> table;  // rows() * child_levels

    std::size_t rows() const noexcept { return child_levels ? table.size() / child_levels : 0; }
    std::span<const double> row(std::size_t r) const {
        return {table.data() + r * child_levels, child_levels};
    }
};

/// A causal DAG plus one CPT per variable whose parent list matches the
/// graph. Immutable.
class ScmSpec {
public:
    /// Throws InvalidCpt on missing/extra CPTs, parent mismatches, wrong
    /// shapes, negative entries or rows not summing to 1 within 1e-9 (rows
    /// are renormalized afterwards).
    ScmSpec(CausalDag graph, std::vector<Cpt> cpts);

    const CausalDag& graph() const noexcept { return graph_; }
    /// CPT of graph variable i.
    const Cpt& cpt(std::size_t i) const { return cpts_.at(i); }
    const Cpt& cpt(std::string_view variable) const { return cpts_[graph_.index_of(variable)]; }
    Schema schema() const { return Schema(graph_.variables()); }

    /// P(variable i = level | parents) for a full assignment in graph order.
    double conditional(std::size_t i, std::span<const LevelCode> assignment) const;
    /// Distribution of variable i given the parent levels in `assignment`.
    std::span<const double> distribution(std::size_t i, std::span<const LevelCode> assignment) const;

private:
    CausalDag graph_;
    std::vector<Cpt> cpts_;
    std::vector<std::vector<std::size_t>> parent_index_;  // per variable, in Cpt parent order
};

/// Product of the factors in topological order. Throws IncompleteAssignment or
/// UnknownLevel / UnknownVariable.
double joint_probability(const ScmSpec& m, const std::map<std::string, std::string>& assignment);
double joint_probability(const ScmSpec& m, std::span<const LevelCode> assignment);

/// Ancestral sampling. Row i draws from CounterRng(derive(seed, i)), one
/// uniform per variable in topological order, so the table does not depend
/// on `threads`. Throws InvalidArgument for n == 0.
DataTable sample(const ScmSpec& m, std::size_t n, std::uint64_t seed, std::size_t threads = 1);

/// Truncated factorization: incoming edges removed, CPT replaced by a point
/// mass. Throws UnknownVariable / UnknownLevel.
ScmSpec intervene(const ScmSpec& m, std::string_view variable, std::string_view level);

/// Exact marginal of one variable by enumeration over its ancestors.
std::vector<double> exact_marginal(const ScmSpec& m, std::string_view variable);

/// Exact joint distribution of `targets` (codes in `targets` order), by
/// enumeration over their ancestors.
std::map<std::vector<LevelCode>, double> exact_joint(const ScmSpec& m,
                                                     const std::vector<std::string>& targets);

/// P(outcome ∈ positive_levels | do(treatment = level)).
double interventional_probability(const ScmSpec& m, std::string_view treatment, std::string_view level,
                                  std::string_view outcome, const std::vector<std::string>& positive_levels);

struct OracleEffect {
    double risk_ratio = 0.0;
    double odds_ratio = 0.0;
    double level_probability = 0.0;
    double reference_probability = 0.0;
};

/// Exact interventional contrast of `level` against `reference`. Throws
/// ZeroDenominator when the reference arm has probability 0 (or the odds are
/// undefined).
OracleEffect oracle_effect(const ScmSpec& m, std::string_view treatment, std::string_view outcome,
                           const std::vector<std::string>& positive_levels, std::string_view level,
                           std::string_view reference);

/// SCM file: a dagfile with `cpt` lines. Errors carry line numbers.
ScmSpec scm_from_dagfile(const DagFile& file);
ScmSpec load_scm(const std::string& path);
ScmSpec parse_scm_text(std::string_view text);
std::string serialize_scm(const ScmSpec& m);

}  // namespace causeway
