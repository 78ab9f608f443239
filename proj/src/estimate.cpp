#include "causeway/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "causeway/error.hpp"
#include "causeway/parallel.hpp"
#include "causeway/rng.hpp"

namespace causeway {

std::string_view to_string(Measure m) { return m == Measure::RiskRatio ? "risk_ratio" : "odds_ratio"; }
std::string_view to_string(Method m) { return m == Method::Adjusted ? "adjusted" : "unadjusted"; }
std::string_view to_string(WeightKind k) {
    switch (k) {
        case WeightKind::Unit: return "unit";
        case WeightKind::Unstabilized: return "unstabilized";
        case WeightKind::Stabilized: return "stabilized";
    }
    return "unit";
}

namespace {

void fill_diagnostics(WeightVector& w, const DataTable& table, std::string_view treatment) {
    auto& d = w.diagnostics;
    const auto col = table.schema().index_of(treatment);
    const auto& var = table.schema().variable(col);
    d.mean_by_level.clear();
    if (w.values.empty()) {
        d.min = d.max = d.mean = 0.0;
        for (const auto& l : var.levels()) d.mean_by_level.push_back({l, 0.0});
        return;
    }
    d.min = *std::min_element(w.values.begin(), w.values.end());
    d.max = *std::max_element(w.values.begin(), w.values.end());
    std::vector<double> sum(var.level_count(), 0.0);
    std::vector<std::size_t> count(var.level_count(), 0);
    double total = 0.0;
    for (std::size_t r = 0; r < w.values.size(); ++r) {
        total += w.values[r];
        sum[table.at(r, col)] += w.values[r];
        ++count[table.at(r, col)];
    }
    d.mean = total / static_cast<double>(w.values.size());
    for (std::size_t l = 0; l < var.level_count(); ++l) {
        d.mean_by_level.push_back({var.level(l), count[l] ? sum[l] / static_cast<double>(count[l]) : 0.0});
    }
}

// type-7 quantile of sorted data
double quantile(const std::vector<double>& sorted, double q) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void check_roles(const Schema& schema, std::string_view treatment, std::string_view outcome,
                 const AdjustmentSet& adjustment) {
    schema.index_of(treatment);
    schema.index_of(outcome);
    if (treatment == outcome) {
        throw Error(ErrorCode::OverlappingRoles, "treatment and outcome are both " + std::string(treatment));
    }
    std::set<std::string> seen;
    for (const auto& z : adjustment) {
        schema.index_of(z);
        if (z == treatment || z == outcome) {
            throw Error(ErrorCode::OverlappingRoles, "adjustment set contains " + z);
        }
        if (!seen.insert(z).second) throw Error(ErrorCode::InvalidArgument, "adjustment variable " + z + " repeated");
    }
}

}  // namespace

std::vector<std::string> resolve_outcome_levels(const Schema& schema, std::string_view outcome,
                                                const std::vector<std::string>& requested) {
    const auto& var = schema.variable(outcome);
    std::vector<std::string> out;
    if (requested.empty()) {
        for (std::size_t l = 0; l < var.level_count(); ++l) {
            if (l != var.reference_index()) out.push_back(var.level(l));
        }
        return out;
    }
    std::set<std::size_t> seen;
    for (const auto& lv : requested) {
        const auto idx = var.level_index(lv);
        if (seen.insert(idx).second) out.push_back(lv);
    }
    if (out.size() == var.level_count()) {
        throw Error(ErrorCode::InvalidArgument, "outcome event cannot contain every level of " + var.name());
    }
    std::sort(out.begin(), out.end(),
              [&](const std::string& a, const std::string& b) { return var.level_index(a) < var.level_index(b); });
    return out;
}

std::vector<double> propensity_scores(const LogisticModel& model, const DataTable& table,
                                      std::string_view treatment) {
    if (model.outcome != treatment) {
        throw Error(ErrorCode::SchemaMismatch,
                    "propensity model is for " + model.outcome + ", not " + std::string(treatment));
    }
    const auto& schema = table.schema();
    const auto tcol = schema.index_of(treatment);
    struct Col {
        std::size_t schema_col;
        LevelCode level;
    };
    std::vector<Col> cols;
    for (const auto& c : model.columns) {
        const auto sc = schema.index_of(c.variable);
        cols.push_back({sc, static_cast<LevelCode>(schema.variable(sc).level_index(c.level))});
    }
    const auto k = model.class_count();
    std::vector<std::size_t> class_of_level(schema.variable(tcol).level_count(), k);
    for (std::size_t c = 0; c < k; ++c) {
        for (auto l : model.class_levels[c]) class_of_level[l] = c;
    }

    std::vector<double> scores(table.row_count());
    std::vector<double> eta(k);
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        eta[0] = 0.0;
        for (std::size_t c = 1; c < k; ++c) {
            const auto row = static_cast<Eigen::Index>(c - 1);
            double v = model.coefficients(row, 0);
            for (std::size_t j = 0; j < cols.size(); ++j) {
                if (table.at(r, cols[j].schema_col) == cols[j].level) {
                    v += model.coefficients(row, static_cast<Eigen::Index>(j + 1));
                }
            }
            eta[c] = v;
        }
        const double top = *std::max_element(eta.begin(), eta.end());
        double denom = 0.0;
        for (double e : eta) denom += std::exp(e - top);
        const auto cls = class_of_level[table.at(r, tcol)];
        if (cls == k) throw Error(ErrorCode::SchemaMismatch, "treatment level outside the model classes");
        scores[r] = std::exp(eta[cls] - top) / denom;
    }
    return scores;
}

WeightVector ip_weights(std::span<const double> scores, const DataTable& table, std::string_view treatment,
                        bool stabilize) {
    if (scores.size() != table.row_count()) {
        throw Error(ErrorCode::InvalidArgument, "one propensity score per row required");
    }
    const auto col = table.schema().index_of(treatment);
    std::vector<double> marginal(table.schema().variable(col).level_count(), 0.0);
    for (std::size_t r = 0; r < table.row_count(); ++r) marginal[table.at(r, col)] += 1.0;
    for (auto& m : marginal) m /= static_cast<double>(std::max<std::size_t>(1, table.row_count()));

    WeightVector w;
    w.kind = stabilize ? WeightKind::Stabilized : WeightKind::Unstabilized;
    w.values.resize(scores.size());
    for (std::size_t r = 0; r < scores.size(); ++r) {
        const double p = scores[r];
        if (!(p > 0.0 && p < 1.0) || !std::isfinite(p)) {
            throw Error(ErrorCode::NonFinite, "propensity score outside (0, 1) at row " + std::to_string(r + 1));
        }
        const double v = (stabilize ? marginal[table.at(r, col)] : 1.0) / p;
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite weight at row " + std::to_string(r + 1));
        w.values[r] = v;
    }
    fill_diagnostics(w, table, treatment);
    return w;
}

WeightVector truncate_weights(WeightVector weights, const DataTable& table, std::string_view treatment) {
    if (weights.values.empty()) return weights;
    auto sorted = weights.values;
    std::sort(sorted.begin(), sorted.end());
    const double lo = quantile(sorted, 0.01);
    const double hi = quantile(sorted, 0.99);
    for (auto& v : weights.values) v = std::clamp(v, lo, hi);
    fill_diagnostics(weights, table, treatment);
    weights.diagnostics.truncated = true;
    return weights;
}

WeightVector unit_weights(const DataTable& table, std::string_view treatment) {
    WeightVector w;
    w.kind = WeightKind::Unit;
    w.values.assign(table.row_count(), 1.0);
    fill_diagnostics(w, table, treatment);
    return w;
}

PointEstimate point_estimate(const DataTable& table, std::string_view treatment, std::string_view outcome,
                             const std::vector<std::string>& outcome_levels, const AdjustmentSet& adjustment,
                             const EstimatorConfig& config) {
    const auto& schema = table.schema();
    check_roles(schema, treatment, outcome, adjustment);
    const auto tcol = schema.index_of(treatment);
    const auto ycol = schema.index_of(outcome);
    const auto& tvar = schema.variable(tcol);
    const auto positives = resolve_outcome_levels(schema, outcome, outcome_levels);

    PointEstimate pe;
    if (adjustment.empty()) {
        pe.weights = unit_weights(table, treatment);
    } else {
        const auto model = fit_multinomial(table, treatment, adjustment, {}, config.fit);
        pe.propensity_convergence = model.convergence;
        const auto scores = propensity_scores(model, table, treatment);
        pe.weights = ip_weights(scores, table, treatment, config.stabilize);
        if (config.truncate) pe.weights = truncate_weights(std::move(pe.weights), table, treatment);
    }

    std::vector<char> is_event(schema.variable(ycol).level_count(), 0);
    for (const auto& lv : positives) is_event[schema.variable(ycol).level_index(lv)] = 1;
    std::vector<double> num(tvar.level_count(), 0.0), den(tvar.level_count(), 0.0);
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        const auto l = table.at(r, tcol);
        den[l] += pe.weights.values[r];
        if (is_event[table.at(r, ycol)]) num[l] += pe.weights.values[r];
    }
    const auto ref = tvar.reference_index();
    if (den[ref] <= 0.0) {
        throw Error(ErrorCode::DegenerateTable, "no observations at reference level " + tvar.reference_level());
    }
    pe.reference_risk = num[ref] / den[ref];
    if (pe.reference_risk <= 0.0) {
        throw Error(ErrorCode::ZeroDenominator,
                    "outcome never occurs at reference level " + tvar.reference_level() + "; risk ratio undefined");
    }

    const auto outcome_model = fit_logistic(table, outcome, positives, {std::string(treatment)},
                                            pe.weights.values, config.fit);
    pe.outcome_convergence = outcome_model.convergence;
    std::size_t column = 0;
    for (std::size_t l = 0; l < tvar.level_count(); ++l) {
        if (l == ref) continue;
        ++column;
        if (den[l] <= 0.0) {
            throw Error(ErrorCode::DegenerateTable, "no observations at treatment level " + tvar.level(l));
        }
        const double risk = num[l] / den[l];
        pe.level_risk.push_back(risk);
        pe.risk_ratio.push_back(risk / pe.reference_risk);
        pe.odds_ratio.push_back(std::exp(outcome_model.coefficients(0, static_cast<Eigen::Index>(column))));
    }
    for (double v : pe.odds_ratio) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite odds ratio");
    }
    return pe;
}

BootstrapResult bootstrap_ci(const DataTable& table, const Estimator& estimator, std::size_t replicates,
                             std::uint64_t seed, std::size_t threads) {
    if (replicates < 100) throw Error(ErrorCode::InvalidArgument, "bootstrap needs at least 100 replicates");
    if (table.row_count() == 0) throw Error(ErrorCode::InvalidArgument, "bootstrap on an empty table");
    const auto n = table.row_count();
    std::vector<std::vector<double>> draws(replicates);
    std::vector<char> failed(replicates, 0);
    parallel_for(replicates, threads, [&](std::size_t r) {
        CounterRng rng(CounterRng::derive(seed, r));
        std::vector<std::size_t> idx(n);
        for (auto& i : idx) i = static_cast<std::size_t>(rng.next_below(n));
        try {
            auto v = estimator(table.select_rows(idx));
            for (double x : v) {
                if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "non-finite replicate");
            }
            draws[r] = std::move(v);
        } catch (const Error&) {
            failed[r] = 1;
        }
    });

    BootstrapResult out;
    out.summary.replicates = replicates;
    out.summary.failures = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
    if (out.summary.failures * 5 > replicates) {
        throw Error(ErrorCode::TooManyFailures, std::to_string(out.summary.failures) + " of " +
                                                    std::to_string(replicates) + " bootstrap replicates failed");
    }
    std::size_t width = 0;
    bool first = true;
    for (std::size_t r = 0; r < replicates; ++r) {
        if (failed[r]) continue;
        if (first) {
            width = draws[r].size();
            first = false;
        } else if (draws[r].size() != width) {
            throw Error(ErrorCode::InvalidArgument, "estimator returned a varying number of components");
        }
    }
    for (std::size_t c = 0; c < width; ++c) {
        std::vector<double> values;
        values.reserve(replicates);
        for (std::size_t r = 0; r < replicates; ++r) {
            if (!failed[r]) values.push_back(draws[r][c]);
        }
        std::sort(values.begin(), values.end());
        out.intervals.push_back({quantile(values, 0.025), quantile(values, 0.975)});
    }
    return out;
}

EstimationResult estimate_effect(const DataTable& table, std::string_view treatment, std::string_view outcome,
                                 const AdjustmentSet& adjustment, const EstimatorConfig& config,
                                 const CausalDag* graph) {
    const auto& schema = table.schema();
    check_roles(schema, treatment, outcome, adjustment);

    EstimationResult res;
    res.treatment = std::string(treatment);
    res.outcome = std::string(outcome);
    res.outcome_levels = resolve_outcome_levels(schema, outcome, config.outcome_levels);
    res.adjustment = adjustment;
    std::sort(res.adjustment.begin(), res.adjustment.end());
    res.method = Method::Adjusted;

    if (graph) {
        res.certification.checked = true;
        res.certification.valid = satisfies_backdoor(*graph, treatment, outcome, res.adjustment);
        if (!res.certification.valid) {
            res.certification.note = explain_backdoor_failure(*graph, treatment, outcome, res.adjustment).value_or("");
            if (!config.override_adjustment) {
                throw Error(ErrorCode::InvalidAdjustment, res.certification.note);
            }
            res.certification.overridden = true;
        }
    }

    const auto pe = point_estimate(table, treatment, outcome, res.outcome_levels, res.adjustment, config);
    res.weight_kind = pe.weights.kind;
    res.weights = pe.weights.diagnostics;
    res.propensity_convergence = pe.propensity_convergence;
    res.outcome_convergence = pe.outcome_convergence;

    const auto contrasts = pe.risk_ratio.size();
    const auto levels = res.outcome_levels;
    const auto adj = res.adjustment;
    const std::string t(treatment), y(outcome);
    const Measure measure = config.measure;
    Estimator est = [&, levels, adj, t, y, measure](const DataTable& d) {
        auto p = point_estimate(d, t, y, levels, adj, config);
        return measure == Measure::RiskRatio ? p.risk_ratio : p.odds_ratio;
    };
    const auto boot = bootstrap_ci(table, est, config.replicates, config.seed, config.threads);
    res.bootstrap = boot.summary;

    const auto& tvar = schema.variable(treatment);
    std::size_t c = 0;
    for (std::size_t l = 0; l < tvar.level_count(); ++l) {
        if (l == tvar.reference_index()) continue;
        EffectEstimate e;
        e.treatment = res.treatment;
        e.level = tvar.level(l);
        e.reference = tvar.reference_level();
        e.odds_ratio = pe.odds_ratio[c];
        e.risk_ratio = pe.risk_ratio[c];
        e.level_risk = pe.level_risk[c];
        e.reference_risk = pe.reference_risk;
        e.measure = measure;
        e.adjustment = res.adjustment;
        e.method = res.method;
        // a resample can miss a level entirely, leaving fewer components
        if (c < boot.intervals.size() && boot.intervals.size() == contrasts) {
            e.interval = boot.intervals[c];
        } else {
            e.interval = {e.point(), e.point()};
        }
        e.interval.low = std::min(e.interval.low, e.point());
        e.interval.high = std::max(e.interval.high, e.point());
        res.contrasts.push_back(std::move(e));
        ++c;
    }
    return res;
}

EstimationResult unadjusted_estimate(const DataTable& table, std::string_view treatment,
                                     std::string_view outcome, const EstimatorConfig& config) {
    auto cfg = config;
    cfg.override_adjustment = true;
    auto res = estimate_effect(table, treatment, outcome, {}, cfg, nullptr);
    res.method = Method::Unadjusted;
    for (auto& e : res.contrasts) e.method = Method::Unadjusted;
    return res;
}

}  // namespace causeway
