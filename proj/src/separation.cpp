#include <algorithm>
#include <set>

#include "causeway/dag.hpp"
#include "causeway/error.hpp"

namespace causeway {

namespace {

NodeMask mask_of(const CausalDag& g, const std::vector<std::string>& names) {
    NodeMask m(g.size(), 0);
    for (const auto& n : names) m[g.index_of(n)] = 1;
    return m;
}

bool is_collider(const TrailPath& t, std::size_t i) {
    return t.directions[i - 1] == StepDirection::Along && t.directions[i] == StepDirection::Against;
}

void collect_trails(const CausalDag& g, std::size_t cur, std::size_t target, NodeMask& on_path,
                    std::vector<std::size_t>& nodes, std::vector<StepDirection>& dirs,
                    std::vector<TrailPath>& out) {
    if (cur == target) {
        TrailPath t;
        for (auto n : nodes) t.nodes.push_back(g.name(n));
        t.directions = dirs;
        out.push_back(std::move(t));
        return;
    }
    // neighbours in name order keep the output lexicographic
    std::vector<std::pair<std::size_t, StepDirection>> next;
    for (auto c : g.children(cur)) next.emplace_back(c, StepDirection::Along);
    for (auto p : g.parents(cur)) next.emplace_back(p, StepDirection::Against);
    std::sort(next.begin(), next.end(),
              [&](const auto& a, const auto& b) { return g.name(a.first) < g.name(b.first); });
    for (const auto& [n, d] : next) {
        if (on_path[n]) continue;
        on_path[n] = 1;
        nodes.push_back(n);
        dirs.push_back(d);
        collect_trails(g, n, target, on_path, nodes, dirs, out);
        dirs.pop_back();
        nodes.pop_back();
        on_path[n] = 0;
    }
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// Lauritzen's criterion: x and y are separated by z in `parents_of` (a DAG
// given as parent lists) iff they are disconnected in the moral graph of the
// ancestral set of {x, y} ∪ z once z is removed.
bool moral_separated(const std::vector<std::vector<std::size_t>>& parents_of, std::size_t x,
                     std::size_t y, const NodeMask& z) {
    const auto n = parents_of.size();
    NodeMask anc(n, 0);
    std::vector<std::size_t> stack;
    auto seed = [&](std::size_t v) {
        if (!anc[v]) {
            anc[v] = 1;
            stack.push_back(v);
        }
    };
    seed(x);
    seed(y);
    for (std::size_t i = 0; i < n; ++i) {
        if (z[i]) seed(i);
    }
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        for (auto p : parents_of[v]) seed(p);
    }
    std::vector<std::vector<std::size_t>> adj(n);
    auto link = [&](std::size_t a, std::size_t b) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    };
    for (std::size_t v = 0; v < n; ++v) {
        if (!anc[v]) continue;
        const auto& ps = parents_of[v];
        for (std::size_t i = 0; i < ps.size(); ++i) {
            link(ps[i], v);
            for (std::size_t j = i + 1; j < ps.size(); ++j) link(ps[i], ps[j]);
        }
    }
    NodeMask seen(n, 0);
    seen[x] = 1;
    stack.assign(1, x);
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        if (v == y) return false;
        for (auto w : adj[v]) {
            if (!seen[w] && !z[w]) {
                seen[w] = 1;
                stack.push_back(w);
            }
        }
    }
    return true;
}

}  // namespace

std::string to_string(const TrailPath& trail) {
    std::string out = trail.nodes.front();
    for (std::size_t i = 0; i < trail.directions.size(); ++i) {
        out += trail.directions[i] == StepDirection::Along ? " -> " : " <- ";
        out += trail.nodes[i + 1];
    }
    return out;
}

std::string to_string(const SeparationQuery& q) {
    std::string out = q.x + " ⊥ " + q.y;
    if (!q.z.empty()) {
        out += " | ";
        for (std::size_t i = 0; i < q.z.size(); ++i) {
            if (i) out += ", ";
            out += q.z[i];
        }
    }
    return out;
}

void check_query(const CausalDag& g, const SeparationQuery& q) {
    g.index_of(q.x);
    g.index_of(q.y);
    for (const auto& v : q.z) g.index_of(v);
    if (q.x == q.y) throw Error(ErrorCode::InvalidArgument, "query endpoints must differ");
    if (std::find(q.z.begin(), q.z.end(), q.x) != q.z.end() ||
        std::find(q.z.begin(), q.z.end(), q.y) != q.z.end()) {
        throw Error(ErrorCode::InvalidArgument, "conditioning set contains a query endpoint");
    }
}

std::vector<TrailPath> all_simple_trails(const CausalDag& g, std::string_view x, std::string_view y) {
    auto xi = g.index_of(x);
    auto yi = g.index_of(y);
    if (xi == yi) throw Error(ErrorCode::InvalidArgument, "trail endpoints must differ");
    NodeMask on_path(g.size(), 0);
    on_path[xi] = 1;
    std::vector<std::size_t> nodes{xi};
    std::vector<StepDirection> dirs;
    std::vector<TrailPath> out;
    collect_trails(g, xi, yi, on_path, nodes, dirs, out);
    std::sort(out.begin(), out.end(),
              [](const TrailPath& a, const TrailPath& b) { return a.nodes < b.nodes; });
    return out;
}

std::vector<std::string> trail_colliders(const TrailPath& trail) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i + 1 < trail.nodes.size(); ++i) {
        if (is_collider(trail, i)) out.push_back(trail.nodes[i]);
    }
    return out;
}

bool trail_blocked(const CausalDag& g, const TrailPath& trail, const std::vector<std::string>& z) {
    const NodeMask zm = mask_of(g, z);
    for (std::size_t i = 1; i + 1 < trail.nodes.size(); ++i) {
        const auto v = g.index_of(trail.nodes[i]);
        if (is_collider(trail, i)) {
            const auto de = g.descendants(v);
            bool opened = false;
            for (std::size_t k = 0; k < g.size(); ++k) {
                if (de[k] && zm[k]) {
                    opened = true;
                    break;
                }
            }
            if (!opened) return true;
        } else if (zm[v]) {
            return true;
        }
    }
    return false;
}

bool d_separated(const CausalDag& g, std::size_t x, std::size_t y, const NodeMask& z) {
    // Reachability over (node, direction) states. `up` means the trail arrived
    // from a child, `down` from a parent.
    const auto n = g.size();
    const NodeMask anc_z = g.ancestors(z);
    std::vector<char> seen_up(n, 0), seen_down(n, 0);
    std::vector<std::pair<std::size_t, bool>> stack{{x, true}};
    seen_up[x] = 1;
    while (!stack.empty()) {
        auto [v, up] = stack.back();
        stack.pop_back();
        if (v == y) return false;
        auto go_up = [&](std::size_t w) {
            if (!seen_up[w]) {
                seen_up[w] = 1;
                stack.emplace_back(w, true);
            }
        };
        auto go_down = [&](std::size_t w) {
            if (!seen_down[w]) {
                seen_down[w] = 1;
                stack.emplace_back(w, false);
            }
        };
        if (up) {
            if (z[v]) continue;
            for (auto p : g.parents(v)) go_up(p);
            for (auto c : g.children(v)) go_down(c);
        } else {
            if (!z[v]) {
                for (auto c : g.children(v)) go_down(c);
            }
            if (anc_z[v]) {
                for (auto p : g.parents(v)) go_up(p);
            }
        }
    }
    return true;
}

bool d_separated(const CausalDag& g, const SeparationQuery& q) {
    check_query(g, q);
    return d_separated(g, g.index_of(q.x), g.index_of(q.y), mask_of(g, q.z));
}

std::vector<TrailPath> backdoor_trails(const CausalDag& g, std::string_view treatment,
                                       std::string_view outcome) {
    auto trails = all_simple_trails(g, treatment, outcome);
    std::erase_if(trails, [](const TrailPath& t) { return t.directions.front() != StepDirection::Against; });
    return trails;
}

namespace {

void check_roles(const CausalDag& g, std::string_view treatment, std::string_view outcome,
                 const std::vector<std::string>& z) {
    g.index_of(treatment);
    g.index_of(outcome);
    for (const auto& v : z) g.index_of(v);
    if (treatment == outcome) {
        throw Error(ErrorCode::InvalidArgument, "treatment and outcome must differ");
    }
    for (const auto& v : z) {
        if (v == treatment || v == outcome) {
            throw Error(ErrorCode::InvalidArgument,
                        "adjustment set may not contain the treatment or outcome");
        }
    }
}

// Parent lists with the treatment's outgoing edges removed; back-door
// trails are exactly the trails of this graph.
std::vector<std::vector<std::size_t>> backdoor_parents(const CausalDag& g, std::size_t treatment) {
    std::vector<std::vector<std::size_t>> ps(g.size());
    for (std::size_t v = 0; v < g.size(); ++v) {
        for (auto p : g.parents(v)) {
            if (p != treatment) ps[v].push_back(p);
        }
    }
    return ps;
}

}  // namespace

bool satisfies_backdoor(const CausalDag& g, std::string_view treatment, std::string_view outcome,
                        const std::vector<std::string>& z) {
    check_roles(g, treatment, outcome, z);
    const auto t = g.index_of(treatment);
    const auto de = g.descendants(t);
    for (const auto& v : z) {
        if (de[g.index_of(v)]) return false;
    }
    const auto zm = mask_of(g, z);
    // Reachability from the treatment restricted to first steps into it.
    for (auto p : g.parents(t)) {
        if (zm[p]) continue;
        if (p == g.index_of(outcome)) return false;
        // p entered "up" from its child t; continue reachability from p while
        // forbidding re-entry into t.
        const auto n = g.size();
        const NodeMask anc_z = g.ancestors(zm);
        std::vector<char> seen_up(n, 0), seen_down(n, 0);
        std::vector<std::pair<std::size_t, bool>> stack{{p, true}};
        seen_up[p] = 1;
        seen_up[t] = seen_down[t] = 1;
        const auto y = g.index_of(outcome);
        while (!stack.empty()) {
            auto [v, up] = stack.back();
            stack.pop_back();
            if (v == y) return false;
            auto go = [&](std::size_t w, bool dir_up) {
                auto& seen = dir_up ? seen_up : seen_down;
                if (!seen[w]) {
                    seen[w] = 1;
                    stack.emplace_back(w, dir_up);
                }
            };
            if (up) {
                if (zm[v]) continue;
                for (auto q : g.parents(v)) go(q, true);
                for (auto c : g.children(v)) go(c, false);
            } else {
                if (!zm[v]) {
                    for (auto c : g.children(v)) go(c, false);
                }
                if (anc_z[v]) {
                    for (auto q : g.parents(v)) go(q, true);
                }
            }
        }
    }
    return true;
}

std::optional<std::string> explain_backdoor_failure(const CausalDag& g, std::string_view treatment,
                                                    std::string_view outcome,
                                                    const std::vector<std::string>& z) {
    check_roles(g, treatment, outcome, z);
    const auto de = g.descendants(g.index_of(treatment));
    for (const auto& v : sorted_unique(z)) {
        if (de[g.index_of(v)]) {
            return v + " is a descendant of " + std::string(treatment) +
                   " (mediator or post-treatment variable); adjusting for it biases the effect";
        }
    }
    for (const auto& trail : backdoor_trails(g, treatment, outcome)) {
        if (trail_blocked(g, trail, z)) continue;
        std::string msg = "open back-door trail " + to_string(trail);
        std::vector<std::string> opened;
        for (const auto& c : trail_colliders(trail)) opened.push_back(c);
        if (!opened.empty()) {
            msg += " (conditioning opens collider";
            msg += opened.size() > 1 ? "s " : " ";
            for (std::size_t i = 0; i < opened.size(); ++i) {
                if (i) msg += ", ";
                msg += opened[i];
            }
            msg += ")";
        }
        return msg;
    }
    return std::nullopt;
}

std::vector<AdjustmentSet> minimal_adjustment_sets(const CausalDag& g, std::string_view treatment,
                                                   std::string_view outcome) {
    check_roles(g, treatment, outcome, {});
    const auto t = g.index_of(treatment);
    const auto y = g.index_of(outcome);
    const auto n = g.size();
    const auto parents_bd = backdoor_parents(g, t);
    const NodeMask empty(n, 0);
    if (moral_separated(parents_bd, t, y, empty)) return {AdjustmentSet{}};

    // Minimal separators live inside the ancestors of {treatment, outcome}.
    NodeMask seeds(n, 0);
    seeds[t] = seeds[y] = 1;
    const auto anc = g.ancestors(seeds);
    const auto de = g.descendants(t);
    std::vector<std::size_t> candidates;
    for (auto i : g.sorted_indices()) {
        if (anc[i] && !de[i] && i != y) candidates.push_back(i);
    }

    std::vector<std::vector<std::size_t>> found;
    const auto k = candidates.size();
    std::vector<std::size_t> pick;
    // sizes ascending; combinations in lexicographic index order over name-sorted candidates
    for (std::size_t size = 1; size <= k; ++size) {
        std::vector<std::size_t> idx(size);
        for (std::size_t i = 0; i < size; ++i) idx[i] = i;
        while (true) {
            std::vector<std::size_t> set;
            for (auto i : idx) set.push_back(candidates[i]);
            std::sort(set.begin(), set.end());
            bool superset = std::any_of(found.begin(), found.end(), [&](const auto& f) {
                return std::includes(set.begin(), set.end(), f.begin(), f.end());
            });
            if (!superset) {
                NodeMask zm(n, 0);
                for (auto v : set) zm[v] = 1;
                if (moral_separated(parents_bd, t, y, zm)) found.push_back(set);
            }
            // next combination
            std::size_t pos = size;
            while (pos > 0 && idx[pos - 1] == k - size + pos - 1) --pos;
            if (pos == 0) break;
            ++idx[pos - 1];
            for (std::size_t i = pos; i < size; ++i) idx[i] = idx[i - 1] + 1;
        }
    }

    std::vector<AdjustmentSet> out;
    for (const auto& f : found) {
        AdjustmentSet s;
        for (auto v : f) s.push_back(g.name(v));
        std::sort(s.begin(), s.end());
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const AdjustmentSet& a, const AdjustmentSet& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    return out;
}

std::vector<SeparationQuery> implied_independencies(const CausalDag& g, ClaimBasis basis) {
    std::vector<SeparationQuery> out;
    const auto n = g.size();
    std::vector<NodeMask> desc(n);
    for (std::size_t i = 0; i < n; ++i) desc[i] = g.descendants(i);

    auto claim = [&](std::size_t v, std::size_t u) {
        SeparationQuery q{g.name(v), g.name(u), g.parent_names(g.name(v))};
        NodeMask zm(n, 0);
        for (auto p : g.parents(v)) zm[p] = 1;
        if (!d_separated(g, v, u, zm)) {
            throw Error(ErrorCode::InvalidArgument, "internal: implied claim not d-separated: " +
                                                        to_string(q));
        }
        return q;
    };

    if (basis == ClaimBasis::LocalMarkov) {
        for (auto v : g.sorted_indices()) {
            for (auto u : g.sorted_indices()) {
                if (u == v || desc[v][u] || g.has_edge(u, v)) continue;
                auto q = claim(v, u);
                // symmetric twin with the same conditioning set
                const bool dup = std::any_of(out.begin(), out.end(), [&](const SeparationQuery& o) {
                    return o.x == q.y && o.y == q.x && o.z == q.z;
                });
                if (!dup) out.push_back(std::move(q));
            }
        }
        return out;
    }

    const auto& order = g.sorted_indices();
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            auto u = order[a];
            auto v = order[b];
            if (g.adjacent(u, v)) continue;
            if (desc[v][u]) std::swap(u, v);  // conditioning node must not be an ancestor of the other
            auto q = claim(v, u);
            if (q.x > q.y) std::swap(q.x, q.y);
            out.push_back(std::move(q));
        }
    }
    return out;
}

}  // namespace causeway
