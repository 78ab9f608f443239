#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "causeway/variable.hpp"

namespace causeway {

struct Edge {
    std::string source;
    std::string target;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Node membership over a graph's variable indices.
using NodeMask = std::vector<char>;

/// Immutable causal DAG over categorical variables. Variables keep their
/// declaration order; every derived listing is sorted by name.
class CausalDag {
public:
    CausalDag() = default;

    std::size_t size() const noexcept { return variables_.size(); }
    const std::vector<Variable>& variables() const noexcept { return variables_; }
    const Variable& variable(std::size_t i) const { return variables_.at(i); }
    const Variable& variable(std::string_view name) const { return variables_[index_of(name)]; }
    const std::string& name(std::size_t i) const { return variables_.at(i).name(); }

    std::optional<std::size_t> find(std::string_view name) const;
    /// Throws UnknownVariable.
    std::size_t index_of(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name).has_value(); }

    const std::vector<std::size_t>& parents(std::size_t i) const { return parents_.at(i); }
    const std::vector<std::size_t>& children(std::size_t i) const { return children_.at(i); }
    std::vector<std::string> parent_names(std::string_view name) const;
    bool has_edge(std::size_t from, std::size_t to) const;
    bool adjacent(std::size_t a, std::size_t b) const { return has_edge(a, b) || has_edge(b, a); }

    std::size_t edge_count() const noexcept { return edge_count_; }
    /// Sorted by (source, target).
    std::vector<Edge> edges() const;

    /// Kahn's order, ties broken by name.
    const std::vector<std::size_t>& topological_order() const noexcept { return topo_; }

    /// Indices sorted by variable name.
    const std::vector<std::size_t>& sorted_indices() const noexcept { return by_name_; }

    NodeMask descendants(std::size_t i) const;  // includes i
    NodeMask ancestors(const NodeMask& seeds) const;  // includes seeds

    /// Mutations return a new validated graph; this one is unchanged.
    CausalDag with_edge(std::string_view source, std::string_view target) const;
    CausalDag without_edge(std::string_view source, std::string_view target) const;

    /// Stable content identity: hex FNV-1a over the canonical serialization.
    std::string identity() const;

    friend bool operator==(const CausalDag& a, const CausalDag& b) {
        return a.variables_ == b.variables_ && a.edges() == b.edges();
    }

    friend CausalDag validate_dag(std::vector<Variable> nodes, std::vector<Edge> edges);

private:
    std::vector<Variable> variables_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::size_t> topo_;
    std::vector<std::size_t> by_name_;
    std::size_t edge_count_ = 0;
};

/// Builds a graph or throws SelfLoop, UnknownEndpoint, DuplicateEdge,
/// DuplicateVariable or CycleDetected (naming an edge on the cycle).
CausalDag validate_dag(std::vector<Variable> nodes, std::vector<Edge> edges);

/// Convenience for tests and synthetic graphs: every node binary {0,1}.
CausalDag make_binary_dag(const std::vector<std::string>& names,
                          const std::vector<std::pair<std::string, std::string>>& edges);

enum class StepDirection { Along, Against };

/// Undirected simple path. `directions[i]` orients the step nodes[i] - nodes[i+1]:
/// Along means nodes[i] -> nodes[i+1].
struct TrailPath {
    std::vector<std::string> nodes;
    std::vector<StepDirection> directions;

    friend bool operator==(const TrailPath&, const TrailPath&) = default;
};

std::string to_string(const TrailPath& trail);

struct SeparationQuery {
    std::string x;
    std::string y;
    std::vector<std::string> z;  // sorted

    friend bool operator==(const SeparationQuery&, const SeparationQuery&) = default;
};

/// Throws UnknownVariable or InvalidArgument when the query is malformed.
void check_query(const CausalDag& g, const SeparationQuery& q);

std::vector<TrailPath> all_simple_trails(const CausalDag& g, std::string_view x, std::string_view y);

/// Trail-level blocking rule: a non-collider blocks iff conditioned; a collider
/// blocks iff neither it nor any descendant is conditioned.
bool trail_blocked(const CausalDag& g, const TrailPath& trail, const std::vector<std::string>& z);

/// Colliders on the trail, in trail order.
std::vector<std::string> trail_colliders(const TrailPath& trail);

bool d_separated(const CausalDag& g, const SeparationQuery& q);

/// Index-level reachability test used by the name-level API.
bool d_separated(const CausalDag& g, std::size_t x, std::size_t y, const NodeMask& z);

std::vector<TrailPath> backdoor_trails(const CausalDag& g, std::string_view treatment,
                                       std::string_view outcome);

bool satisfies_backdoor(const CausalDag& g, std::string_view treatment, std::string_view outcome,
                        const std::vector<std::string>& z);

/// Human-readable reason a set fails the back-door criterion; nullopt when it
/// passes. Names the offending descendant or an open back-door trail.
std::optional<std::string> explain_backdoor_failure(const CausalDag& g, std::string_view treatment,
                                                    std::string_view outcome,
                                                    const std::vector<std::string>& z);

using AdjustmentSet = std::vector<std::string>;  // sorted

/// Inclusion-minimal back-door sets, sorted by size then lexicographically.
/// `{∅}` when nothing needs blocking; empty when no set works.
std::vector<AdjustmentSet> minimal_adjustment_sets(const CausalDag& g, std::string_view treatment,
                                                   std::string_view outcome);

enum class ClaimBasis {
    LocalMarkov,  // v ⊥ u | pa(v) for every non-descendant non-parent u
    MissingEdge,  // one claim per non-adjacent pair
};

std::vector<SeparationQuery> implied_independencies(const CausalDag& g,
                                                    ClaimBasis basis = ClaimBasis::LocalMarkov);

std::string to_string(const SeparationQuery& q);

}  // namespace causeway
