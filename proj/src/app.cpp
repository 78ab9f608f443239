#include "causeway/app.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "causeway/report_format.hpp"

namespace causeway {

namespace {

std::string_view statistic_name(CiStatistic s) { return s == CiStatistic::GSquared ? "g2" : "pearson"; }
std::string_view basis_name(ClaimBasis b) { return b == ClaimBasis::LocalMarkov ? "local-markov" : "missing-edge"; }

Json provenance(const CausalDag& g, std::uint64_t version, const AnalysisConfig& config) {
    return Json{{"graph_id", g.identity()}, {"graph_version", version}, {"config_hash", config_hash(config)}};
}

Json provenance(const CausalDag& g, std::uint64_t version, const DataTable& data, const AnalysisConfig& config) {
    auto p = provenance(g, version, config);
    p["data_hash"] = fnv1a_hex(table_to_csv(data));
    return p;
}

Json header(std::string_view format, const Json& prov, const std::string& request_key) {
    Json doc;
    doc["format"] = format;
    doc["tool_version"] = kToolVersion;
    doc["report_id"] = fnv1a_hex(std::string(format) + "\n" + prov.dump() + "\n" + request_key);
    doc["provenance"] = prov;
    return doc;
}

Json names(const std::vector<std::string>& v) { return Json(v); }

std::string brace_set(const std::vector<std::string>& v) {
    if (v.empty()) return "∅";
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s + "}";
}

std::size_t display_width(std::string_view s) {
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
        return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    }));
}

std::string pad(std::string s, std::size_t width) {
    const auto w = display_width(s);
    if (w < width) s.append(width - w, ' ');
    return s;
}

Json test_result_json(const IndependenceTestResult& r) {
    Json j;
    j["claim"] = to_string(r.claim);
    j["x"] = r.claim.x;
    j["y"] = r.claim.y;
    j["z"] = names(r.claim.z);
    j["statistic"] = r.statistic;
    j["dof"] = r.dof;
    j["p_value"] = r.p_value;
    j["p"] = format_p_value(r.p_value);
    j["verdict"] = to_string(r.verdict);
    j["low_count"] = r.low_count;
    j["strata"] = r.strata;
    return j;
}

Json convergence_json(const ConvergenceRecord& c) {
    return Json{{"iterations", c.iterations}, {"gradient_norm", c.gradient_norm}, {"converged", c.converged}};
}

std::string contrast_label(const Json& c) {
    return c["treatment"].get<std::string>() + ": " + c["level"].get<std::string>() + " vs " +
           c["reference"].get<std::string>();
}

std::string contrast_value(const Json& c) {
    return format_fixed3(c["point"].get<double>()) + " [" + format_fixed3(c["interval"]["low"].get<double>()) +
           ", " + format_fixed3(c["interval"]["high"].get<double>()) + "]";
}

Json estimation_json(const EstimationResult& r) {
    Json j;
    j["method"] = to_string(r.method);
    Json contrasts = Json::array();
    for (const auto& e : r.contrasts) {
        Json c;
        c["treatment"] = e.treatment;
        c["level"] = e.level;
        c["reference"] = e.reference;
        c["measure"] = to_string(e.measure);
        c["point"] = e.point();
        c["interval"] = {{"low", e.interval.low}, {"high", e.interval.high}};
        c["odds_ratio"] = e.odds_ratio;
        c["risk_ratio"] = e.risk_ratio;
        c["level_risk"] = e.level_risk;
        c["reference_risk"] = e.reference_risk;
        c["text"] = e.treatment + ": " + e.level + " vs " + e.reference + " — " + format_fixed3(e.point()) + " [" +
                    format_fixed3(e.interval.low) + ", " + format_fixed3(e.interval.high) + "]";
        contrasts.push_back(std::move(c));
    }
    j["contrasts"] = std::move(contrasts);
    Json by_level = Json::object();
    for (const auto& m : r.weights.mean_by_level) by_level[m.level] = m.mean;
    j["weights"] = {{"kind", to_string(r.weight_kind)},
                    {"min", r.weights.min},
                    {"max", r.weights.max},
                    {"mean", r.weights.mean},
                    {"mean_by_level", by_level},
                    {"truncated", r.weights.truncated}};
    j["convergence"] = {{"propensity", convergence_json(r.propensity_convergence)},
                        {"outcome", convergence_json(r.outcome_convergence)}};
    j["bootstrap"] = {{"replicates", r.bootstrap.replicates}, {"failures", r.bootstrap.failures}};
    return j;
}

EstimatorConfig estimator_config(const AnalysisConfig& config, const EstimateRequest& req) {
    EstimatorConfig ec;
    ec.outcome_levels = req.outcome_levels;
    ec.stabilize = config.stabilize;
    ec.truncate = config.truncate;
    ec.measure = config.measure;
    ec.replicates = config.replicates;
    ec.seed = config.seed;
    ec.threads = config.threads;
    ec.override_adjustment = req.override_adjustment;
    return ec;
}

std::string render_graph(const Json& doc) {
    std::ostringstream out;
    out << "graph " << doc["provenance"]["graph_id"].get<std::string>() << " v"
        << doc["provenance"]["graph_version"].get<std::uint64_t>() << ": " << doc["variables"].size()
        << " variables, " << doc["edges"].size() << " edges\n";
    for (const auto& e : doc["edges"]) {
        out << "  " << e["source"].get<std::string>() << " -> " << e["target"].get<std::string>() << "\n";
    }
    return out.str();
}

std::string render_implications(const Json& doc) {
    std::ostringstream out;
    const auto& cfg = doc["config"];
    out << "graph " << doc["provenance"]["graph_id"].get<std::string>() << " v"
        << doc["provenance"]["graph_version"].get<std::uint64_t>() << "  alpha=" << format_exact(cfg["alpha"].get<double>())
        << "  " << cfg["statistic"].get<std::string>() << "  " << cfg["basis"].get<std::string>() << "\n\n";
    std::size_t width = 5;
    for (const auto& c : doc["claims"]) width = std::max(width, display_width(c["test"]["claim"].get<std::string>()));
    width += 2;
    auto row = [&](const Json& c, const std::string& label, const std::string& status) {
        out << pad(label, width) << pad(c["test"]["p"].get<std::string>(), 13) << status
            << (c["test"]["low_count"].get<bool>() ? "  (low count)" : "") << "\n";
    };
    out << pad("claim", width) << pad("p-value", 13) << "verdict\n";
    for (const auto& c : doc["claims"]) {
        if (c["kind"] != "independence") continue;
        row(c, c["test"]["claim"].get<std::string>(),
            c["test"]["verdict"].get<std::string>() + (c["violated"].get<bool>() ? "  VIOLATED" : ""));
    }
    out << "\n" << pad("edge (given other parents)", width) << pad("p-value", 13) << "status\n";
    for (const auto& c : doc["claims"]) {
        if (c["kind"] != "adjacency") continue;
        row(c, c["edge"].get<std::string>(), c["violated"].get<bool>() ? "UNSUPPORTED" : "supported");
    }
    const auto nv = doc["violated_claims"].size();
    const auto nu = doc["unsupported_edges"].size();
    out << "\nverdict: " << doc["verdict"].get<std::string>();
    if (nv) out << " (" << nv << " violated claim" << (nv == 1 ? "" : "s") << ", " << nu << " unsupported edge"
                << (nu == 1 ? "" : "s") << ")";
    out << "\n";
    if (!doc["proposals"].empty()) {
        out << "proposals:\n";
        for (const auto& p : doc["proposals"]) out << "  " << p["summary"].get<std::string>() << "\n";
    }
    return out.str();
}

std::string render_adjustment(const Json& doc) {
    std::ostringstream out;
    std::size_t tw = 9, ow = 7;
    for (const auto& r : doc["rows"]) {
        tw = std::max(tw, r["treatment"].get<std::string>().size());
        ow = std::max(ow, r["outcome"].get<std::string>().size());
    }
    out << pad("treatment", tw + 2) << pad("outcome", ow + 2) << "confounders in back-door paths\n";
    for (const auto& r : doc["rows"]) {
        out << pad(r["treatment"].get<std::string>(), tw + 2) << pad(r["outcome"].get<std::string>(), ow + 2)
            << r["text"].get<std::string>() << "\n";
    }
    return out.str();
}

std::string render_estimate(const Json& doc) {
    std::ostringstream out;
    const auto& adj = doc["adjustment"];
    out << "outcome: " << doc["outcome"].get<std::string>() << " ∈ " << brace_set(doc["outcome_levels"])
        << "\nadjustment: "
        << (adj["set"].empty() ? std::string("∅ (no adjustment needed)") : brace_set(adj["set"]));
    if (adj["overridden"].get<bool>()) {
        out << "  OVERRIDE: " << adj["note"].get<std::string>();
    } else if (adj["certified"].get<bool>()) {
        out << "  (back-door criterion satisfied)";
    }
    const auto& est = doc["adjusted"];
    out << "\nmeasure: " << (doc["config"]["measure"] == "rr" ? "risk ratio" : "odds ratio")
        << ", 95% percentile bootstrap (" << est["bootstrap"]["replicates"].get<std::size_t>() << " replicates, "
        << est["bootstrap"]["failures"].get<std::size_t>() << " failed, seed "
        << doc["config"]["seed"].get<std::uint64_t>() << ")\n\n";
    for (const auto& c : est["contrasts"]) out << c["text"].get<std::string>() << "\n";
    const auto& w = est["weights"];
    out << "\nweights: " << w["kind"].get<std::string>() << "  min " << format_fixed3(w["min"].get<double>())
        << "  max " << format_fixed3(w["max"].get<double>()) << "  mean " << format_fixed3(w["mean"].get<double>())
        << "\n";
    if (doc.contains("unadjusted")) {
        const auto& un = doc["unadjusted"];
        std::size_t width = 8;
        for (const auto& c : est["contrasts"]) width = std::max(width, display_width(contrast_label(c)));
        width += 2;
        out << "\n" << pad("contrast", width) << pad("adjusted", 24) << "unadjusted\n";
        for (std::size_t i = 0; i < est["contrasts"].size(); ++i) {
            const auto& a = est["contrasts"][i];
            const auto& u = un["contrasts"][i];
            out << pad(contrast_label(a), width) << pad(contrast_value(a), 24) << contrast_value(u) << "\n";
        }
    }
    return out.str();
}

std::string render_error(const Json& doc) {
    const auto& e = doc["error"];
    std::string s = "error: " + e["code"].get<std::string>();
    if (e["line"].get<std::size_t>()) s += " (line " + std::to_string(e["line"].get<std::size_t>()) + ")";
    if (e["row"].get<std::size_t>()) {
        s += " (row " + std::to_string(e["row"].get<std::size_t>()) + ", column " +
             std::to_string(e["column"].get<std::size_t>()) + ")";
    }
    return s + ": " + e["message"].get<std::string>() + "\n";
}

}  // namespace

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Json config_document(const AnalysisConfig& config) {
    return Json{{"alpha", config.alpha},
                {"statistic", statistic_name(config.statistic)},
                {"basis", basis_name(config.basis)},
                {"replicates", config.replicates},
                {"seed", config.seed},
                {"measure", config.measure == Measure::RiskRatio ? "rr" : "or"},
                {"stabilize", config.stabilize},
                {"truncate", config.truncate}};
}

std::string config_hash(const AnalysisConfig& config) { return fnv1a_hex(config_document(config).dump()); }

StudyDescriptor parse_study(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const std::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("study descriptor: ") + e.what());
    }
    StudyDescriptor s;
    try {
        s.outcome = j.at("outcome").get<std::string>();
        if (j.contains("outcome_levels")) s.outcome_levels = j["outcome_levels"].get<std::vector<std::string>>();
        s.outcome_label = j.value("outcome_label", "");
        if (j.contains("treatments")) s.treatments = j["treatments"].get<std::vector<std::string>>();
        s.unit = j.value("unit", "");
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("study descriptor: ") + e.what());
    }
    return s;
}

StudyDescriptor load_study(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_study(ss.str());
}

Json graph_document(const CausalDag& g, std::uint64_t version) {
    Json doc = header("causeway.graph/1", provenance(g, version, AnalysisConfig{}), "");
    doc["provenance"].erase("config_hash");
    Json vars = Json::array();
    for (const auto& v : g.variables()) {
        vars.push_back({{"name", v.name()}, {"levels", v.levels()}, {"reference", v.reference_level()}});
    }
    doc["variables"] = std::move(vars);
    Json edges = Json::array();
    for (const auto& e : g.edges()) edges.push_back({{"source", e.source}, {"target", e.target}});
    doc["edges"] = std::move(edges);
    doc["dagfile"] = serialize_dag(g);
    return doc;
}

Json validate_document(const CausalDag& g, std::uint64_t version) {
    Json doc = graph_document(g, version);
    doc["format"] = "causeway.validate/1";
    doc["report_id"] = fnv1a_hex("causeway.validate/1\n" + doc["provenance"].dump());
    doc["valid"] = true;
    return doc;
}

Json implications_document(const CausalDag& g, std::uint64_t version, const DataTable& table,
                           const AnalysisConfig& config) {
    ImplicationOptions opts;
    opts.alpha = config.alpha;
    opts.statistic = config.statistic;
    opts.basis = config.basis;
    opts.threads = config.threads;
    const auto report = test_implications(g, table, opts);

    Json doc = header("causeway.implications/1", provenance(g, version, table, config), "");
    doc["config"] = config_document(config);
    doc["rows"] = table.row_count();
    Json claims = Json::array();
    Json violated = Json::array();
    Json unsupported = Json::array();
    for (std::size_t i = 0; i < report.claims.size(); ++i) {
        const auto& c = report.claims[i];
        Json j;
        j["kind"] = c.kind == ClaimKind::Independence ? "independence" : "adjacency";
        if (c.edge) j["edge"] = c.edge->source + " -> " + c.edge->target;
        j["test"] = test_result_json(c.result);
        j["violated"] = c.violated;
        claims.push_back(std::move(j));
        if (c.violated) {
            violated.push_back(i);
            if (c.kind == ClaimKind::Adjacency) unsupported.push_back(i);
        }
    }
    doc["claims"] = std::move(claims);
    doc["violated_claims"] = std::move(violated);
    doc["unsupported_edges"] = std::move(unsupported);
    doc["verdict"] = report.consistent() ? "Consistent" : "Inconsistent";
    Json proposals = Json::array();
    for (const auto& p : suggest_edits(report)) {
        proposals.push_back({{"remove", {{"source", p.remove.source}, {"target", p.remove.target}}},
                             {"p_value", p.evidence.p_value},
                             {"summary", p.summary}});
    }
    doc["proposals"] = std::move(proposals);
    return doc;
}

Json adjustment_document(const CausalDag& g, std::uint64_t version, const std::vector<std::string>& treatments,
                         std::string_view outcome, const AnalysisConfig& config) {
    std::string key(outcome);
    for (const auto& t : treatments) key += "\n" + t;
    Json doc = header("causeway.adjustment/1", provenance(g, version, config), key);
    Json rows = Json::array();
    for (const auto& t : treatments) {
        const auto sets = minimal_adjustment_sets(g, t, outcome);
        Json r;
        r["treatment"] = t;
        r["outcome"] = outcome;
        r["minimal_sets"] = sets;
        r["backdoor_trails"] = Json::array();
        for (const auto& trail : backdoor_trails(g, t, outcome)) r["backdoor_trails"].push_back(to_string(trail));
        if (sets.empty()) {
            r["text"] = "no back-door adjustment set exists";
        } else if (sets.size() == 1 && sets[0].empty()) {
            r["text"] = "∅ (no adjustment needed)";
        } else {
            std::string text;
            for (std::size_t i = 0; i < sets.size(); ++i) text += (i ? " or " : "") + brace_set(sets[i]);
            r["text"] = text;
        }
        rows.push_back(std::move(r));
    }
    doc["rows"] = std::move(rows);
    return doc;
}

Json estimate_document(const CausalDag& g, std::uint64_t version, const DataTable& table,
                       const EstimateRequest& request, const AnalysisConfig& config) {
    g.index_of(request.treatment);
    g.index_of(request.outcome);
    AdjustmentSet adjustment;
    std::string source = "user";
    if (request.adjustment) {
        adjustment = *request.adjustment;
        std::sort(adjustment.begin(), adjustment.end());
    } else {
        const auto sets = minimal_adjustment_sets(g, request.treatment, request.outcome);
        if (sets.empty()) {
            throw Error(ErrorCode::InvalidAdjustment,
                        "no back-door adjustment set exists for " + request.treatment + " -> " + request.outcome);
        }
        adjustment = sets.front();
        source = "minimal";
    }

    const auto ec = estimator_config(config, request);
    const auto adjusted = estimate_effect(table, request.treatment, request.outcome, adjustment, ec, &g);

    std::string key = request.treatment + "\n" + request.outcome + "\n" + Json(adjustment).dump() + "\n" +
                      Json(adjusted.outcome_levels).dump() + "\n" + (request.compare_unadjusted ? "c" : "-") +
                      (request.override_adjustment ? "o" : "-");
    Json doc = header("causeway.estimate/1", provenance(g, version, table, config), key);
    doc["config"] = config_document(config);
    doc["rows"] = table.row_count();
    doc["treatment"] = request.treatment;
    doc["outcome"] = request.outcome;
    doc["outcome_levels"] = adjusted.outcome_levels;
    doc["adjustment"] = {{"set", adjusted.adjustment},
                         {"source", source},
                         {"certified", adjusted.certification.valid},
                         {"overridden", adjusted.certification.overridden},
                         {"note", adjusted.certification.note}};
    doc["adjusted"] = estimation_json(adjusted);
    if (request.compare_unadjusted) {
        doc["unadjusted"] = estimation_json(unadjusted_estimate(table, request.treatment, request.outcome, ec));
    }
    return doc;
}

Json simulate_document(const ScmSpec& m, std::size_t n, std::uint64_t seed, const DataTable& table) {
    AnalysisConfig cfg;
    cfg.seed = seed;
    Json doc = header("causeway.simulate/1", provenance(m.graph(), 1, cfg), std::to_string(n));
    doc["rows"] = n;
    doc["seed"] = seed;
    Json cols = Json::array();
    for (const auto& v : table.schema().variables()) cols.push_back(v.name());
    doc["columns"] = std::move(cols);
    doc["data_hash"] = fnv1a_hex(table_to_csv(table));
    return doc;
}

Json error_document(const Error& e) {
    Json doc;
    doc["format"] = "causeway.error/1";
    doc["tool_version"] = kToolVersion;
    doc["error"] = {{"code", error_code_name(e.code())},
                    {"message", e.message()},
                    {"line", e.line()},
                    {"row", e.row()},
                    {"column", e.column()}};
    return doc;
}

std::string render_text(const Json& doc) {
    const auto format = doc.value("format", "");
    if (format == "causeway.graph/1") return render_graph(doc);
    if (format == "causeway.validate/1") return "valid DAG\n" + render_graph(doc);
    if (format == "causeway.implications/1") return render_implications(doc);
    if (format == "causeway.adjustment/1") return render_adjustment(doc);
    if (format == "causeway.estimate/1") return render_estimate(doc);
    if (format == "causeway.simulate/1") {
        return "simulated " + std::to_string(doc["rows"].get<std::size_t>()) + " rows (seed " +
               std::to_string(doc["seed"].get<std::uint64_t>()) + ")\n";
    }
    if (format == "causeway.error/1") return render_error(doc);
    return doc.dump(2) + "\n";
}

int exit_code_for(const Json& doc) {
    const auto format = doc.value("format", "");
    if (format == "causeway.error/1") {
        return doc["error"]["code"] == "InvalidAdjustment" ? 1 : 2;
    }
    if (format == "causeway.implications/1") return doc["verdict"] == "Consistent" ? 0 : 1;
    return 0;
}

std::string dump_document(const Json& doc) { return doc.dump(2) + "\n"; }

}  // namespace causeway
