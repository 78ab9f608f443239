#include "causeway/dagfile.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "causeway/error.hpp"

namespace causeway {

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> tokens(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        auto b = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
        if (i > b) out.push_back(s.substr(b, i - b));
    }
    return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
    throw Error(ErrorCode::ParseError, msg, line);
}

Variable parse_var(std::string_view body, std::size_t line) {
    auto tok = tokens(body);
    if (tok.size() < 2 || tok.size() > 3) fail(line, "expected: var <name> levels=<l1,...> [ref=<level>]");
    std::string name(tok[0]);
    std::vector<std::string> levels;
    std::string ref;
    bool have_levels = false;
    for (std::size_t i = 1; i < tok.size(); ++i) {
        auto t = tok[i];
        if (t.starts_with("levels=")) {
            for (auto l : split(t.substr(7), ',')) levels.emplace_back(l);
            have_levels = true;
        } else if (t.starts_with("ref=")) {
            ref = std::string(t.substr(4));
        } else {
            fail(line, "unexpected token '" + std::string(t) + "' in var line");
        }
    }
    if (!have_levels) fail(line, "var line missing levels=");
    try {
        if (ref.empty()) return Variable(name, levels);
        return Variable(name, levels, ref);
    } catch (const Error& e) {
        throw Error(e.code(), e.message(), line);
    }
}

double parse_prob(std::string_view s, std::size_t line) {
    double v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
        fail(line, "malformed probability '" + std::string(s) + "'");
    }
    return v;
}

CptLine parse_cpt(std::string_view body, std::size_t line) {
    auto bar = body.find('|');
    auto colon = body.rfind(':');
    if (bar == std::string_view::npos || colon == std::string_view::npos || colon < bar) {
        fail(line, "expected: cpt <child> | <Parent=level,...> : <p1,p2,...>");
    }
    CptLine c;
    c.line = line;
    c.child = std::string(trim(body.substr(0, bar)));
    if (!is_valid_name(c.child)) fail(line, "invalid child name '" + c.child + "'");
    auto combo = trim(body.substr(bar + 1, colon - bar - 1));
    if (!combo.empty()) {
        for (auto part : split(combo, ',')) {
            auto eq = part.find('=');
            if (eq == std::string_view::npos) fail(line, "parent assignment needs '=': " + std::string(part));
            c.parent_levels.emplace_back(std::string(trim(part.substr(0, eq))),
                                         std::string(trim(part.substr(eq + 1))));
        }
    }
    for (auto p : split(trim(body.substr(colon + 1)), ',')) c.probabilities.push_back(parse_prob(p, line));
    return c;
}

}  // namespace

DagFile parse_dagfile(std::istream& in) {
    DagFile f;
    std::string raw;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (!header) {
            if (line != "dagfile v1") fail(line_no, "expected header 'dagfile v1'");
            header = true;
            continue;
        }
        auto sp = line.find_first_of(" \t");
        auto keyword = line.substr(0, sp);
        auto body = sp == std::string_view::npos ? std::string_view{} : trim(line.substr(sp));
        if (keyword == "var") {
            f.variables.push_back(parse_var(body, line_no));
        } else if (keyword == "edge") {
            auto tok = tokens(body);
            if (tok.size() != 3 || tok[1] != "->") fail(line_no, "expected: edge <src> -> <dst>");
            f.edges.push_back({std::string(tok[0]), std::string(tok[2])});
            f.edge_lines.push_back(line_no);
        } else if (keyword == "cpt") {
            f.cpts.push_back(parse_cpt(body, line_no));
        } else {
            fail(line_no, "unknown directive '" + std::string(keyword) + "'");
        }
    }
    if (!header) fail(line_no == 0 ? 1 : line_no, "missing 'dagfile v1' header");
    return f;
}

DagFile parse_dagfile_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_dagfile(in);
}

DagFile read_dagfile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    return parse_dagfile(in);
}

CausalDag graph_from_dagfile(const DagFile& file) {
    try {
        return validate_dag(file.variables, file.edges);
    } catch (const Error& e) {
        // attach the line of the first edge the message names
        std::size_t line = 0;
        const std::string& msg = e.message();
        for (std::size_t i = 0; i < file.edges.size(); ++i) {
            const auto& ed = file.edges[i];
            if (msg.find(ed.source + " -> " + ed.target) != std::string::npos) {
                line = file.edge_lines[i];
                break;
            }
        }
        if (line == 0) throw;
        throw Error(e.code(), msg, line);
    }
}

CausalDag load_dag(const std::string& path) { return graph_from_dagfile(read_dagfile(path)); }

CausalDag parse_dag_text(std::string_view text) { return graph_from_dagfile(parse_dagfile_text(text)); }

std::vector<Variable> load_schema_variables(const std::string& path) {
    return read_dagfile(path).variables;
}

std::string serialize_dag(const CausalDag& g) {
    std::string out = "dagfile v1\n";
    for (const auto& v : g.variables()) {
        out += "var " + v.name() + " levels=";
        for (std::size_t i = 0; i < v.level_count(); ++i) {
            if (i) out += ',';
            out += v.level(i);
        }
        out += " ref=" + v.reference_level() + "\n";
    }
    for (const auto& e : g.edges()) out += "edge " + e.source + " -> " + e.target + "\n";
    return out;
}

}  // namespace causeway
