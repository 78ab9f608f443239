#include "causeway/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "causeway/error.hpp"
#include "causeway/parallel.hpp"
#include "causeway/report_format.hpp"
#include "causeway/rng.hpp"

namespace causeway {

namespace {

std::size_t row_of(const Cpt& c, const std::vector<std::size_t>& parent_index,
                   std::span<const LevelCode> assignment) {
    std::size_t r = 0;
    for (std::size_t k = 0; k < parent_index.size(); ++k) {
        r = r * c.parent_levels[k] + assignment[parent_index[k]];
    }
    return r;
}

}  // namespace

ScmSpec::ScmSpec(CausalDag graph, std::vector<Cpt> cpts) : graph_(std::move(graph)) {
    const auto n = graph_.size();
    cpts_.resize(n);
    parent_index_.resize(n);
    std::vector<char> have(n, 0);
    for (auto& c : cpts) {
        auto idx = graph_.find(c.child);
        if (!idx) throw Error(ErrorCode::InvalidCpt, "CPT for undeclared variable " + c.child);
        if (have[*idx]) throw Error(ErrorCode::InvalidCpt, "two CPTs for " + c.child);
        have[*idx] = 1;
        const auto& var = graph_.variable(*idx);
        std::vector<std::string> expect = graph_.parent_names(c.child);
        std::vector<std::string> got = c.parents;
        std::sort(got.begin(), got.end());
        if (got != expect) throw Error(ErrorCode::InvalidCpt, "CPT parents of " + c.child + " differ from the graph");
        if (c.child_levels != var.level_count()) {
            throw Error(ErrorCode::InvalidCpt, "CPT for " + c.child + " has wrong number of levels");
        }
        std::size_t rows = 1;
        for (std::size_t k = 0; k < c.parents.size(); ++k) {
            auto p = graph_.index_of(c.parents[k]);
            parent_index_[*idx].push_back(p);
            if (c.parent_levels.size() != c.parents.size() ||
                c.parent_levels[k] != graph_.variable(p).level_count()) {
                throw Error(ErrorCode::InvalidCpt, "CPT for " + c.child + " has wrong parent level counts");
            }
            rows *= c.parent_levels[k];
        }
        if (c.table.size() != rows * c.child_levels) {
            throw Error(ErrorCode::InvalidCpt, "CPT for " + c.child + " has wrong size");
        }
        for (std::size_t r = 0; r < rows; ++r) {
            double sum = 0;
            for (std::size_t l = 0; l < c.child_levels; ++l) {
                double p = c.table[r * c.child_levels + l];
                if (!(p >= 0.0) || !std::isfinite(p)) {
                    throw Error(ErrorCode::InvalidCpt, "CPT for " + c.child + " has a negative or non-finite entry");
                }
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                throw Error(ErrorCode::InvalidCpt, "CPT row for " + c.child + " sums to " + format_exact(sum));
            }
            for (std::size_t l = 0; l < c.child_levels; ++l) c.table[r * c.child_levels + l] /= sum;
        }
        cpts_[*idx] = std::move(c);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!have[i]) throw Error(ErrorCode::InvalidCpt, "missing CPT for " + graph_.name(i));
    }
}

double ScmSpec::conditional(std::size_t i, std::span<const LevelCode> assignment) const {
    const auto& c = cpts_[i];
    return c.table[row_of(c, parent_index_[i], assignment) * c.child_levels + assignment[i]];
}

std::span<const double> ScmSpec::distribution(std::size_t i, std::span<const LevelCode> assignment) const {
    const auto& c = cpts_[i];
    return c.row(row_of(c, parent_index_[i], assignment));
}

double joint_probability(const ScmSpec& m, std::span<const LevelCode> assignment) {
    const auto& g = m.graph();
    if (assignment.size() != g.size()) {
        throw Error(ErrorCode::IncompleteAssignment, "assignment must cover every variable");
    }
    double p = 1.0;
    for (auto v : g.topological_order()) {
        if (assignment[v] >= g.variable(v).level_count()) {
            throw Error(ErrorCode::UnknownLevel, "level code out of range for " + g.name(v));
        }
        p *= m.conditional(v, assignment);
    }
    return p;
}

double joint_probability(const ScmSpec& m, const std::map<std::string, std::string>& assignment) {
    const auto& g = m.graph();
    std::vector<LevelCode> codes(g.size());
    std::vector<char> seen(g.size(), 0);
    for (const auto& [name, level] : assignment) {
        auto i = g.index_of(name);
        codes[i] = static_cast<LevelCode>(g.variable(i).level_index(level));
        seen[i] = 1;
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!seen[i]) throw Error(ErrorCode::IncompleteAssignment, "no level given for " + g.name(i));
    }
    return joint_probability(m, codes);
}

DataTable sample(const ScmSpec& m, std::size_t n, std::uint64_t seed, std::size_t threads) {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample size must be at least 1");
    const auto& g = m.graph();
    const auto w = g.size();
    std::vector<LevelCode> cells(n * w);
    const auto& order = g.topological_order();
    parallel_for(n, threads, [&](std::size_t r) {
        CounterRng rng(CounterRng::derive(seed, r));
        std::span<LevelCode> row(cells.data() + r * w, w);
        for (auto v : order) {
            const double u = rng.next_double();
            const auto dist = m.distribution(v, row);
            double acc = 0.0;
            LevelCode level = static_cast<LevelCode>(dist.size() - 1);
            for (std::size_t l = 0; l < dist.size(); ++l) {
                acc += dist[l];
                if (u < acc) {
                    level = static_cast<LevelCode>(l);
                    break;
                }
            }
            row[v] = level;
        }
    });
    return DataTable(Schema(g.variables()), std::move(cells));
}

ScmSpec intervene(const ScmSpec& m, std::string_view variable, std::string_view level) {
    const auto& g = m.graph();
    const auto idx = g.index_of(variable);
    const auto code = g.variable(idx).level_index(level);
    std::vector<Edge> edges;
    for (const auto& e : g.edges()) {
        if (e.target != variable) edges.push_back(e);
    }
    auto graph = validate_dag(g.variables(), std::move(edges));
    std::vector<Cpt> cpts;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (i == idx) {
            Cpt c;
            c.child = std::string(variable);
            c.child_levels = g.variable(i).level_count();
            c.table.assign(c.child_levels, 0.0);
            c.table[code] = 1.0;
            cpts.push_back(std::move(c));
        } else {
            cpts.push_back(m.cpt(i));
        }
    }
    return ScmSpec(std::move(graph), std::move(cpts));
}

std::map<std::vector<LevelCode>, double> exact_joint(const ScmSpec& m,
                                                     const std::vector<std::string>& targets) {
    const auto& g = m.graph();
    NodeMask seeds(g.size(), 0);
    std::vector<std::size_t> target_idx;
    for (const auto& t : targets) {
        target_idx.push_back(g.index_of(t));
        seeds[target_idx.back()] = 1;
    }
    const auto anc = g.ancestors(seeds);
    std::vector<std::size_t> order;
    for (auto v : g.topological_order()) {
        if (anc[v]) order.push_back(v);
    }
    std::map<std::vector<LevelCode>, double> out;
    std::vector<LevelCode> assignment(g.size(), 0);
    std::vector<LevelCode> key(target_idx.size());
    // depth-first over ancestors in topological order, multiplying factors on the way down
    auto recurse = [&](auto&& self, std::size_t depth, double p) -> void {
        if (p == 0.0) return;
        if (depth == order.size()) {
            for (std::size_t k = 0; k < target_idx.size(); ++k) key[k] = assignment[target_idx[k]];
            out[key] += p;
            return;
        }
        const auto v = order[depth];
        const auto levels = g.variable(v).level_count();
        for (std::size_t l = 0; l < levels; ++l) {
            assignment[v] = static_cast<LevelCode>(l);
            self(self, depth + 1, p * m.conditional(v, assignment));
        }
        assignment[v] = 0;
    };
    recurse(recurse, 0, 1.0);
    return out;
}

std::vector<double> exact_marginal(const ScmSpec& m, std::string_view variable) {
    const auto& var = m.graph().variable(variable);
    std::vector<double> out(var.level_count(), 0.0);
    for (const auto& [k, p] : exact_joint(m, {std::string(variable)})) out[k[0]] += p;
    return out;
}

double interventional_probability(const ScmSpec& m, std::string_view treatment, std::string_view level,
                                  std::string_view outcome, const std::vector<std::string>& positive_levels) {
    const auto& y = m.graph().variable(outcome);
    std::vector<char> positive(y.level_count(), 0);
    for (const auto& l : positive_levels) positive[y.level_index(l)] = 1;
    const auto marginal = exact_marginal(intervene(m, treatment, level), outcome);
    double p = 0.0;
    for (std::size_t l = 0; l < marginal.size(); ++l) {
        if (positive[l]) p += marginal[l];
    }
    return p;
}

OracleEffect oracle_effect(const ScmSpec& m, std::string_view treatment, std::string_view outcome,
                           const std::vector<std::string>& positive_levels, std::string_view level,
                           std::string_view reference) {
    OracleEffect e;
    e.level_probability = interventional_probability(m, treatment, level, outcome, positive_levels);
    e.reference_probability = interventional_probability(m, treatment, reference, outcome, positive_levels);
    if (e.reference_probability <= 0.0 || e.reference_probability >= 1.0 || e.level_probability >= 1.0) {
        throw Error(ErrorCode::ZeroDenominator, "reference arm probability leaves the ratios undefined");
    }
    e.risk_ratio = e.level_probability / e.reference_probability;
    e.odds_ratio = (e.level_probability / (1.0 - e.level_probability)) /
                   (e.reference_probability / (1.0 - e.reference_probability));
    return e;
}

ScmSpec scm_from_dagfile(const DagFile& file) {
    auto graph = graph_from_dagfile(file);
    std::vector<Cpt> cpts(graph.size());
    std::vector<std::vector<char>> filled(graph.size());
    for (std::size_t i = 0; i < graph.size(); ++i) {
        auto& c = cpts[i];
        c.child = graph.name(i);
        c.child_levels = graph.variable(i).level_count();
        c.parents = graph.parent_names(c.child);
        std::size_t rows = 1;
        for (const auto& p : c.parents) {
            c.parent_levels.push_back(graph.variable(p).level_count());
            rows *= c.parent_levels.back();
        }
        c.table.assign(rows * c.child_levels, 0.0);
        filled[i].assign(rows, 0);
    }
    for (const auto& line : file.cpts) {
        auto fail = [&](const std::string& msg) { throw Error(ErrorCode::InvalidCpt, msg, line.line); };
        auto idx = graph.find(line.child);
        if (!idx) fail("cpt for undeclared variable " + line.child);
        auto& c = cpts[*idx];
        if (line.parent_levels.size() != c.parents.size()) {
            fail("cpt for " + c.child + " must assign exactly its parents");
        }
        std::size_t row = 0;
        for (std::size_t k = 0; k < c.parents.size(); ++k) {
            auto it = std::find_if(line.parent_levels.begin(), line.parent_levels.end(),
                                   [&](const auto& pl) { return pl.first == c.parents[k]; });
            if (it == line.parent_levels.end()) fail("cpt for " + c.child + " misses parent " + c.parents[k]);
            auto level = graph.variable(c.parents[k]).find_level(it->second);
            if (!level) fail("'" + it->second + "' is not a level of " + c.parents[k]);
            row = row * c.parent_levels[k] + *level;
        }
        if (line.probabilities.size() != c.child_levels) {
            fail("cpt for " + c.child + " needs " + std::to_string(c.child_levels) + " probabilities");
        }
        if (filled[*idx][row]) fail("parent combination repeated for " + c.child);
        filled[*idx][row] = 1;
        double sum = 0;
        for (std::size_t l = 0; l < c.child_levels; ++l) {
            const double p = line.probabilities[l];
            if (!(p >= 0.0)) fail("negative probability in cpt for " + c.child);
            sum += p;
            c.table[row * c.child_levels + l] = p;
        }
        if (std::abs(sum - 1.0) > 1e-9) fail("probabilities for " + c.child + " sum to " + format_exact(sum));
    }
    for (std::size_t i = 0; i < graph.size(); ++i) {
        if (std::find(filled[i].begin(), filled[i].end(), 0) != filled[i].end()) {
            throw Error(ErrorCode::InvalidCpt, "cpt for " + graph.name(i) + " does not cover every parent combination");
        }
    }
    return ScmSpec(std::move(graph), std::move(cpts));
}

ScmSpec load_scm(const std::string& path) { return scm_from_dagfile(read_dagfile(path)); }

ScmSpec parse_scm_text(std::string_view text) { return scm_from_dagfile(parse_dagfile_text(text)); }

std::string serialize_scm(const ScmSpec& m) {
    const auto& g = m.graph();
    std::string out = serialize_dag(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& c = m.cpt(i);
        for (std::size_t r = 0; r < c.rows(); ++r) {
            out += "cpt " + c.child + " |";
            std::size_t rem = r;
            std::vector<std::size_t> codes(c.parents.size());
            for (std::size_t k = c.parents.size(); k-- > 0;) {
                codes[k] = rem % c.parent_levels[k];
                rem /= c.parent_levels[k];
            }
            for (std::size_t k = 0; k < c.parents.size(); ++k) {
                out += k ? "," : " ";
                out += c.parents[k] + "=" + g.variable(c.parents[k]).level(codes[k]);
            }
            out += " :";
            for (std::size_t l = 0; l < c.child_levels; ++l) {
                out += l ? "," : " ";
                out += format_exact(c.row(r)[l]);
            }
            out += "\n";
        }
    }
    return out;
}

}  // namespace causeway
