#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "causeway/dag.hpp"

namespace causeway {

/// A `cpt` line kept verbatim for the SCM reader.
struct CptLine {
    std::size_t line = 0;
    std::string child;
    std::vector<std::pair<std::string, std::string>> parent_levels;
    std::vector<double> probabilities;
};

/// Parsed content of a `dagfile v1` document.
///
///     dagfile v1
///     # comment
///     var Traffic levels=Normal,Medium,Heavy ref=Normal
///     edge SocialImpact -> Traffic
///     cpt Traffic | SocialImpact=No,Urgency=Urgent : 0.5,0.3,0.2
///
/// `ref=` is optional (defaults to the first level). `cpt` lines are only
/// meaningful to the SCM reader; graph readers accept and ignore them.
struct DagFile {
    std::vector<Variable> variables;
    std::vector<Edge> edges;
    std::vector<std::size_t> edge_lines;
    std::vector<CptLine> cpts;
};

/// Syntax-level parse. Errors are ParseError / InvalidVariable with the line number.
DagFile parse_dagfile(std::istream& in);
DagFile parse_dagfile_text(std::string_view text);
DagFile read_dagfile(const std::string& path);

/// Parse and validate the graph; validation errors carry the offending line.
CausalDag graph_from_dagfile(const DagFile& file);
CausalDag load_dag(const std::string& path);
CausalDag parse_dag_text(std::string_view text);

/// Variables only; lets a graph or SCM file double as a schema file.
std::vector<Variable> load_schema_variables(const std::string& path);

std::string serialize_dag(const CausalDag& g);

}  // namespace causeway
