#include "causeway/dag.hpp"

#include <algorithm>
#include <cstdio>
#include <queue>
#include <set>

#include "causeway/error.hpp"

namespace causeway {

std::optional<std::size_t> CausalDag::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t CausalDag::index_of(std::string_view name) const {
    auto idx = find(name);
    if (!idx) throw Error(ErrorCode::UnknownVariable, "unknown variable '" + std::string(name) + "'");
    return *idx;
}

std::vector<std::string> CausalDag::parent_names(std::string_view name) const {
    std::vector<std::string> out;
    for (auto p : parents_[index_of(name)]) out.push_back(variables_[p].name());
    std::sort(out.begin(), out.end());
    return out;
}

bool CausalDag::has_edge(std::size_t from, std::size_t to) const {
    const auto& ch = children_.at(from);
    return std::find(ch.begin(), ch.end(), to) != ch.end();
}

std::vector<Edge> CausalDag::edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (std::size_t i = 0; i < size(); ++i) {
        for (auto c : children_[i]) out.push_back({variables_[i].name(), variables_[c].name()});
    }
    std::sort(out.begin(), out.end());
    return out;
}

NodeMask CausalDag::descendants(std::size_t i) const {
    NodeMask seen(size(), 0);
    std::vector<std::size_t> stack{i};
    seen[i] = 1;
    while (!stack.empty()) {
        auto n = stack.back();
        stack.pop_back();
        for (auto c : children_[n]) {
            if (!seen[c]) {
                seen[c] = 1;
                stack.push_back(c);
            }
        }
    }
    return seen;
}

NodeMask CausalDag::ancestors(const NodeMask& seeds) const {
    NodeMask seen(size(), 0);
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < size(); ++i) {
        if (seeds[i]) {
            seen[i] = 1;
            stack.push_back(i);
        }
    }
    while (!stack.empty()) {
        auto n = stack.back();
        stack.pop_back();
        for (auto p : parents_[n]) {
            if (!seen[p]) {
                seen[p] = 1;
                stack.push_back(p);
            }
        }
    }
    return seen;
}

CausalDag CausalDag::with_edge(std::string_view source, std::string_view target) const {
    auto e = edges();
    e.push_back({std::string(source), std::string(target)});
    return validate_dag(variables_, std::move(e));
}

CausalDag CausalDag::without_edge(std::string_view source, std::string_view target) const {
    auto e = edges();
    auto it = std::find(e.begin(), e.end(), Edge{std::string(source), std::string(target)});
    if (it == e.end()) {
        throw Error(ErrorCode::InvalidArgument, "no edge " + std::string(source) + " -> " +
                                                    std::string(target) + " to remove");
    }
    e.erase(it);
    return validate_dag(variables_, std::move(e));
}

std::string CausalDag::identity() const {
    std::string canon;
    for (auto i : by_name_) {
        const auto& v = variables_[i];
        canon += v.name();
        canon += ':';
        for (const auto& l : v.levels()) {
            canon += l;
            canon += ',';
        }
        canon += '@';
        canon += v.reference_level();
        canon += '\n';
    }
    for (const auto& e : edges()) canon += e.source + "->" + e.target + "\n";
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

CausalDag validate_dag(std::vector<Variable> nodes, std::vector<Edge> edges) {
    CausalDag g;
    g.variables_ = std::move(nodes);
    const auto n = g.variables_.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!g.index_.emplace(g.variables_[i].name(), i).second) {
            throw Error(ErrorCode::DuplicateVariable,
                        "variable '" + g.variables_[i].name() + "' declared twice");
        }
    }
    g.parents_.assign(n, {});
    g.children_.assign(n, {});
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& e : edges) {
        if (e.source == e.target) throw Error(ErrorCode::SelfLoop, "self-loop " + e.source + " -> " + e.target);
        auto s = g.find(e.source);
        auto t = g.find(e.target);
        if (!s || !t) {
            throw Error(ErrorCode::UnknownEndpoint,
                        "edge " + e.source + " -> " + e.target + " names undeclared variable '" +
                            (!s ? e.source : e.target) + "'");
        }
        if (!seen.emplace(*s, *t).second) {
            throw Error(ErrorCode::DuplicateEdge, "duplicate edge " + e.source + " -> " + e.target);
        }
        g.children_[*s].push_back(*t);
        g.parents_[*t].push_back(*s);
    }
    g.edge_count_ = seen.size();

    auto by_name = [&g](std::size_t a, std::size_t b) {
        return g.variables_[a].name() < g.variables_[b].name();
    };
    for (std::size_t i = 0; i < n; ++i) {
        std::sort(g.parents_[i].begin(), g.parents_[i].end(), by_name);
        std::sort(g.children_[i].begin(), g.children_[i].end(), by_name);
    }
    g.by_name_.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.by_name_[i] = i;
    std::sort(g.by_name_.begin(), g.by_name_.end(), by_name);

    std::vector<std::size_t> indegree(n);
    for (std::size_t i = 0; i < n; ++i) indegree[i] = g.parents_[i].size();
    auto after = [&](std::size_t a, std::size_t b) { return by_name(b, a); };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(after)> ready(after);
    for (std::size_t i = 0; i < n; ++i) {
        if (indegree[i] == 0) ready.push(i);
    }
    while (!ready.empty()) {
        auto v = ready.top();
        ready.pop();
        g.topo_.push_back(v);
        for (auto c : g.children_[v]) {
            if (--indegree[c] == 0) ready.push(c);
        }
    }
    if (g.topo_.size() != n) {
        // Every unplaced node lies on or downstream of a cycle; walk parents
        // among unplaced nodes until one repeats.
        NodeMask placed(n, 0);
        for (auto v : g.topo_) placed[v] = 1;
        std::size_t start = 0;
        while (placed[start]) ++start;
        std::vector<std::size_t> walk{start};
        std::vector<int> pos(n, -1);
        pos[start] = 0;
        while (true) {
            auto cur = walk.back();
            std::size_t next = n;
            for (auto p : g.parents_[cur]) {
                if (!placed[p]) {
                    next = p;
                    break;
                }
            }
            if (pos[next] >= 0) {
                // next -> cur is an edge on the cycle
                throw Error(ErrorCode::CycleDetected,
                            "cycle through edge " + g.variables_[next].name() + " -> " +
                                g.variables_[cur].name());
            }
            pos[next] = static_cast<int>(walk.size());
            walk.push_back(next);
        }
    }
    return g;
}

CausalDag make_binary_dag(const std::vector<std::string>& names,
                          const std::vector<std::pair<std::string, std::string>>& edges) {
    std::vector<Variable> vars;
    for (const auto& n : names) vars.emplace_back(n, std::vector<std::string>{"0", "1"});
    std::vector<Edge> es;
    for (const auto& [s, t] : edges) es.push_back({s, t});
    return validate_dag(std::move(vars), std::move(es));
}

}  // namespace causeway
