#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "causeway/app.hpp"
#include "causeway/dagfile.hpp"
#include "causeway/service.hpp"

using namespace causeway;

namespace {

struct Common {
    bool json = false;
    std::string out;
    std::size_t threads = 1;
};

struct Flags {
    std::string graph, data, scm, study, outcome, adjust, outcome_levels, measure = "rr", statistic = "g2",
        basis = "local-markov", workspace, host = "127.0.0.1";
    std::vector<std::string> treatments;
    double alpha = kDefaultAlpha;
    std::size_t replicates = 200, n = 0;
    std::uint64_t seed = 1;
    int port = 8080;
    bool compare = false, override_adjustment = false, drop_incomplete = false, truncate = false,
         unstabilized = false;
    Common common;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

AnalysisConfig make_config(const Flags& f) {
    AnalysisConfig c;
    c.alpha = f.alpha;
    c.statistic = f.statistic == "pearson" ? CiStatistic::PearsonChiSquared : CiStatistic::GSquared;
    c.basis = f.basis == "missing-edge" ? ClaimBasis::MissingEdge : ClaimBasis::LocalMarkov;
    c.replicates = f.replicates;
    c.seed = f.seed;
    c.measure = f.measure == "or" ? Measure::OddsRatio : Measure::RiskRatio;
    c.truncate = f.truncate;
    c.stabilize = !f.unstabilized;
    c.threads = f.common.threads;
    return c;
}

DataTable load_data(const Flags& f, const CausalDag& g) {
    auto r = load_table_file(f.data, Schema(g.variables()), LoadOptions{f.drop_incomplete});
    if (r.dropped_rows) std::cerr << "dropped " << r.dropped_rows << " incomplete rows\n";
    return std::move(r.table);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    out << text;
}

int emit(const Json& doc, const Common& c) {
    if (!c.out.empty()) write_text_file(c.out, dump_document(doc));
    if (c.json) {
        std::cout << dump_document(doc);
    } else {
        std::cout << render_text(doc);
    }
    return exit_code_for(doc);
}

int emit_error(const Error& e, const Common& c) {
    const auto doc = error_document(e);
    if (c.json) std::cout << dump_document(doc);
    std::cerr << render_text(doc);
    return exit_code_for(doc);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"causeway: causal DAG workbench for categorical data"};
    app.require_subcommand(1);
    Flags f;

    auto add_common = [&](CLI::App* sub, bool with_out = true) {
        sub->add_flag("--json", f.common.json, "print the structured document instead of text");
        if (with_out) sub->add_option("--out", f.common.out, "also write the structured document to a file");
        sub->add_option("--threads", f.common.threads, "worker threads (results do not depend on it)")
            ->check(CLI::PositiveNumber);
    };
    auto add_data = [&](CLI::App* sub) {
        sub->add_option("data", f.data, "CSV data file")->required()->check(CLI::ExistingFile);
        sub->add_flag("--drop-incomplete", f.drop_incomplete, "drop rows with empty cells");
    };

    auto* validate = app.add_subcommand("validate", "check a graph file");
    validate->add_option("graph", f.graph, "dagfile")->required()->check(CLI::ExistingFile);
    add_common(validate);

    auto* implications = app.add_subcommand("implications", "test the graph's implied independencies");
    implications->add_option("graph", f.graph, "dagfile")->required()->check(CLI::ExistingFile);
    add_data(implications);
    implications->add_option("--alpha", f.alpha, "significance level")->check(CLI::Range(0.0, 1.0));
    implications->add_option("--statistic", f.statistic, "g2 or pearson")
        ->check(CLI::IsMember({"g2", "pearson"}));
    implications->add_option("--basis", f.basis, "local-markov or missing-edge")
        ->check(CLI::IsMember({"local-markov", "missing-edge"}));
    add_common(implications);

    auto* adjust = app.add_subcommand("adjust", "minimal back-door adjustment sets");
    adjust->add_option("graph", f.graph, "dagfile")->required()->check(CLI::ExistingFile);
    adjust->add_option("--treatment", f.treatments, "treatment variable (repeatable)");
    adjust->add_option("--outcome", f.outcome, "outcome variable");
    adjust->add_option("--study", f.study, "study descriptor supplying outcome/treatments")
        ->check(CLI::ExistingFile);
    add_common(adjust);

    auto* estimate = app.add_subcommand("estimate", "IPW causal effect estimate");
    estimate->add_option("graph", f.graph, "dagfile")->required()->check(CLI::ExistingFile);
    add_data(estimate);
    estimate->add_option("--treatment", f.treatments, "treatment variable")->required()->expected(1);
    estimate->add_option("--outcome", f.outcome, "outcome variable");
    estimate->add_option("--outcome-level", f.outcome_levels, "comma-separated event levels of the outcome");
    estimate->add_option("--study", f.study, "study descriptor supplying outcome and event levels")
        ->check(CLI::ExistingFile);
    estimate->add_option("--adjust", f.adjust, "comma-separated adjustment set, 'none' for ∅");
    estimate->add_option("--measure", f.measure, "rr or or")->check(CLI::IsMember({"rr", "or"}));
    estimate->add_option("--replicates", f.replicates, "bootstrap replicates (>= 100)");
    estimate->add_option("--seed", f.seed, "bootstrap seed");
    estimate->add_flag("--compare-unadjusted", f.compare, "also report the unadjusted estimate");
    estimate->add_flag("--override", f.override_adjustment, "accept an adjustment set that fails the back-door criterion");
    estimate->add_flag("--truncate", f.truncate, "truncate weights at the 1st/99th percentiles");
    estimate->add_flag("--unstabilized", f.unstabilized, "use 1/propensity weights");
    add_common(estimate);

    auto* simulate = app.add_subcommand("simulate", "sample a dataset from an SCM file");
    simulate->add_option("scm", f.scm, "dagfile with cpt lines")->required()->check(CLI::ExistingFile);
    simulate->add_option("-n,--rows", f.n, "number of rows")->required();
    simulate->add_option("--seed", f.seed, "sampling seed");
    simulate->add_option("--out", f.common.out, "CSV output (default stdout)");
    simulate->add_option("--threads", f.common.threads, "worker threads")->check(CLI::PositiveNumber);

    auto* serve_cmd = app.add_subcommand("serve", "HTTP API over a workspace");
    serve_cmd->add_option("--workspace", f.workspace, "workspace directory")->envname("CAUSEWAY_WORKSPACE");
    serve_cmd->add_option("--graph", f.graph, "initial graph for an empty workspace");
    serve_cmd->add_option("--data", f.data, "dataset for a workspace without one");
    serve_cmd->add_option("--port", f.port, "TCP port");
    serve_cmd->add_option("--host", f.host, "bind address");
    serve_cmd->add_option("--alpha", f.alpha, "default significance level");
    serve_cmd->add_option("--seed", f.seed, "default seed");
    serve_cmd->add_option("--replicates", f.replicates, "default bootstrap replicates");
    serve_cmd->add_option("--threads", f.common.threads, "worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (validate->parsed()) return emit(validate_document(load_dag(f.graph), 1), f.common);

        if (implications->parsed()) {
            const auto g = load_dag(f.graph);
            return emit(implications_document(g, 1, load_data(f, g), make_config(f)), f.common);
        }

        std::optional<StudyDescriptor> study;
        if (!f.study.empty()) study = load_study(f.study);

        if (adjust->parsed()) {
            const auto g = load_dag(f.graph);
            auto outcome = f.outcome.empty() && study ? study->outcome : f.outcome;
            auto treatments = f.treatments.empty() && study ? study->treatments : f.treatments;
            if (outcome.empty() || treatments.empty()) {
                throw Error(ErrorCode::InvalidArgument, "adjust needs --outcome and --treatment (or --study)");
            }
            for (const auto& t : treatments) g.index_of(t);
            g.index_of(outcome);
            return emit(adjustment_document(g, 1, treatments, outcome, make_config(f)), f.common);
        }

        if (estimate->parsed()) {
            const auto g = load_dag(f.graph);
            EstimateRequest req;
            req.treatment = f.treatments.front();
            req.outcome = f.outcome;
            if (study) {
                if (req.outcome.empty()) req.outcome = study->outcome;
                if (req.outcome == study->outcome) req.outcome_levels = study->outcome_levels;
            }
            if (req.outcome.empty()) throw Error(ErrorCode::InvalidArgument, "estimate needs --outcome (or --study)");
            if (!f.outcome_levels.empty()) req.outcome_levels = split_list(f.outcome_levels);
            if (!f.adjust.empty()) {
                req.adjustment = f.adjust == "none" ? AdjustmentSet{} : split_list(f.adjust);
            }
            req.compare_unadjusted = f.compare;
            req.override_adjustment = f.override_adjustment;
            return emit(estimate_document(g, 1, load_data(f, g), req, make_config(f)), f.common);
        }

        if (simulate->parsed()) {
            const auto m = load_scm(f.scm);
            const auto table = sample(m, f.n, f.seed, f.common.threads);
            if (f.common.out.empty()) {
                write_table(std::cout, table);
            } else {
                std::ofstream out(f.common.out, std::ios::binary | std::ios::trunc);
                if (!out) throw Error(ErrorCode::Io, "cannot write " + f.common.out);
                write_table(out, table);
                std::cerr << render_text(simulate_document(m, f.n, f.seed, table));
            }
            return 0;
        }

        if (serve_cmd->parsed()) {
            if (f.workspace.empty()) {
                throw Error(ErrorCode::InvalidArgument, "serve needs --workspace or CAUSEWAY_WORKSPACE");
            }
            ServeOptions opts;
            opts.host = f.host;
            opts.port = f.port;
            opts.workspace = f.workspace;
            if (!f.graph.empty()) opts.graph = f.graph;
            if (!f.data.empty()) opts.data = f.data;
            opts.config = make_config(f);
            serve(opts, std::cerr);
            return 0;
        }
    } catch (const Error& e) {
        return emit_error(e, f.common);
    } catch (const std::exception& e) {
        return emit_error(Error(ErrorCode::Io, e.what()), f.common);
    }
    return 2;
}
