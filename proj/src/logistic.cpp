#include "causeway/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "causeway/error.hpp"

namespace causeway {

namespace {

// Coefficients beyond this magnitude only arise when the likelihood has no
// finite maximizer and the ridge term alone holds the fit in place.
constexpr double kSeparationCoefficient = 10.0;

struct Design {
    std::vector<std::size_t> schema_cols;
    std::vector<std::vector<int>> column_of;  // per predictor: level code -> design column (-1 = reference)
    std::vector<DesignColumn> columns;
};

Design make_design(const Schema& schema, std::string_view outcome, const std::vector<std::string>& predictors) {
    Design d;
    std::set<std::string> seen;
    for (const auto& p : predictors) {
        if (p == outcome) throw Error(ErrorCode::InvalidArgument, "predictor " + p + " is the outcome");
        if (!seen.insert(p).second) throw Error(ErrorCode::InvalidArgument, "predictor " + p + " repeated");
        const auto idx = schema.index_of(p);
        const auto& var = schema.variable(idx);
        d.schema_cols.push_back(idx);
        std::vector<int> map(var.level_count(), -1);
        for (std::size_t l = 0; l < var.level_count(); ++l) {
            if (l == var.reference_index()) continue;
            map[l] = static_cast<int>(d.columns.size());
            d.columns.push_back({p, var.level(l)});
        }
        d.column_of.push_back(std::move(map));
    }
    return d;
}

Eigen::VectorXd design_row(const Design& d, std::span<const LevelCode> row) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.columns.size() + 1));
    x[0] = 1.0;
    for (std::size_t k = 0; k < d.schema_cols.size(); ++k) {
        const int c = d.column_of[k][row[d.schema_cols[k]]];
        if (c >= 0) x[c + 1] = 1.0;
    }
    return x;
}

void softmax(const Eigen::MatrixXd& beta, const Eigen::VectorXd& x, std::vector<double>& probs) {
    const auto k = static_cast<std::size_t>(beta.rows()) + 1;
    probs.assign(k, 0.0);
    double top = 0.0;
    for (std::size_t c = 1; c < k; ++c) {
        probs[c] = beta.row(static_cast<Eigen::Index>(c - 1)).dot(x);
        top = std::max(top, probs[c]);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        probs[c] = std::exp(probs[c] - top);
        sum += probs[c];
    }
    for (auto& p : probs) p /= sum;
}

struct Pattern {
    Eigen::VectorXd x;
    std::vector<double> counts;  // weighted, per class
    double total = 0.0;
};

double objective(const std::vector<Pattern>& patterns, const Eigen::MatrixXd& beta, double ridge) {
    double ll = 0.0;
    std::vector<double> probs;
    for (const auto& p : patterns) {
        softmax(beta, p.x, probs);
        for (std::size_t c = 0; c < probs.size(); ++c) {
            if (p.counts[c] > 0) ll += p.counts[c] * std::log(probs[c]);
        }
    }
    return ll - 0.5 * ridge * beta.squaredNorm();
}

LogisticModel fit(const DataTable& table, LogisticModel model, std::span<const double> weights,
                  const FitOptions& options) {
    const auto& schema = table.schema();
    const auto outcome_col = schema.index_of(model.outcome);
    const Design design = make_design(schema, model.outcome, model.predictors);
    model.columns = design.columns;
    if (!weights.empty() && weights.size() != table.row_count()) {
        throw Error(ErrorCode::InvalidArgument, "one weight per row required");
    }

    const auto k = model.class_labels.size();
    std::vector<std::size_t> class_of_level(schema.variable(outcome_col).level_count(), k);
    for (std::size_t c = 0; c < k; ++c) {
        for (auto l : model.class_levels[c]) class_of_level[l] = c;
    }

    std::map<std::vector<LevelCode>, std::vector<double>> grouped;
    std::vector<LevelCode> key(design.schema_cols.size());
    std::vector<double> class_totals(k, 0.0);
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        const double w = weights.empty() ? 1.0 : weights[r];
        if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::NonFinite, "weights must be finite and nonnegative");
        const auto cls = class_of_level[table.at(r, outcome_col)];
        if (cls == k) continue;
        for (std::size_t j = 0; j < key.size(); ++j) key[j] = table.at(r, design.schema_cols[j]);
        auto& counts = grouped[key];
        if (counts.empty()) counts.assign(k, 0.0);
        counts[cls] += w;
        class_totals[cls] += w;
    }
    const auto observed = std::count_if(class_totals.begin(), class_totals.end(), [](double v) { return v > 0; });
    if (observed < 2) {
        throw Error(ErrorCode::DegenerateOutcome, "only one class of " + model.outcome + " observed");
    }

    std::vector<Pattern> patterns;
    patterns.reserve(grouped.size());
    for (auto& [codes, counts] : grouped) {
        Pattern p;
        std::vector<LevelCode> full(schema.size(), 0);
        for (std::size_t j = 0; j < codes.size(); ++j) full[design.schema_cols[j]] = codes[j];
        p.x = design_row(design, full);
        p.total = 0.0;
        for (double c : counts) p.total += c;
        p.counts = std::move(counts);
        patterns.push_back(std::move(p));
    }

    const auto cols = static_cast<Eigen::Index>(design.columns.size() + 1);
    const auto km1 = static_cast<Eigen::Index>(k - 1);
    const auto dim = km1 * cols;
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(km1, cols);
    std::vector<double> probs;
    ConvergenceRecord rec;
    double current = objective(patterns, beta, options.ridge);
    for (std::size_t iter = 0;; ++iter) {
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
        Eigen::MatrixXd info = Eigen::MatrixXd::Zero(dim, dim);
        for (const auto& p : patterns) {
            softmax(beta, p.x, probs);
            const Eigen::MatrixXd xx = p.x * p.x.transpose();
            for (Eigen::Index a = 0; a < km1; ++a) {
                const auto ca = static_cast<std::size_t>(a + 1);
                grad.segment(a * cols, cols) += (p.counts[ca] - p.total * probs[ca]) * p.x;
                for (Eigen::Index b = 0; b < km1; ++b) {
                    const auto cb = static_cast<std::size_t>(b + 1);
                    const double w = p.total * probs[ca] * ((a == b ? 1.0 : 0.0) - probs[cb]);
                    info.block(a * cols, b * cols, cols, cols) += w * xx;
                }
            }
        }
        for (Eigen::Index a = 0; a < km1; ++a) {
            grad.segment(a * cols, cols) -= options.ridge * beta.row(a).transpose();
        }
        info.diagonal().array() += options.ridge;
        rec.gradient_norm = grad.norm();
        rec.iterations = iter;
        if (rec.gradient_norm < options.tolerance) {
            rec.converged = true;
            break;
        }
        if (iter >= options.max_iterations) break;
        const Eigen::VectorXd step = info.ldlt().solve(grad);
        double t = 1.0;
        Eigen::MatrixXd trial;
        double value = current;
        while (true) {
            trial = beta;
            for (Eigen::Index a = 0; a < km1; ++a) {
                trial.row(a) += t * step.segment(a * cols, cols).transpose();
            }
            value = objective(patterns, trial, options.ridge);
            if (value >= current - 1e-12 * std::abs(current) || t < 1e-8) break;
            t *= 0.5;
        }
        beta = std::move(trial);
        current = value;
    }
    model.coefficients = std::move(beta);
    model.convergence = rec;

    // divergence check
    double worst = 0.0;
    Eigen::Index worst_col = -1;
    for (Eigen::Index a = 0; a < km1; ++a) {
        for (Eigen::Index c = 1; c < cols; ++c) {
            if (std::abs(model.coefficients(a, c)) > worst) {
                worst = std::abs(model.coefficients(a, c));
                worst_col = c;
            }
        }
    }
    if (worst > kSeparationCoefficient) {
        const auto& col = model.columns[static_cast<std::size_t>(worst_col - 1)];
        throw Error(ErrorCode::PerfectSeparation, model.outcome + " is perfectly separated by " + col.variable +
                                                      " (level " + col.level + ")");
    }
    const double intercept = km1 > 0 ? model.coefficients.col(0).cwiseAbs().maxCoeff() : 0.0;
    if (intercept > kSeparationCoefficient) {
        if (model.predictors.empty()) {
            throw Error(ErrorCode::DegenerateOutcome, "a class of " + model.outcome + " is never observed");
        }
        std::string names;
        for (const auto& p : model.predictors) names += (names.empty() ? "" : ", ") + p;
        throw Error(ErrorCode::PerfectSeparation,
                    model.outcome + " is perfectly separated at the reference levels of " + names);
    }
    return model;
}

}  // namespace

std::vector<double> LogisticModel::predict(const DataTable& table, std::size_t row) const {
    const auto& schema = table.schema();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(columns.size() + 1));
    x[0] = 1.0;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const auto col = schema.index_of(columns[c].variable);
        if (schema.variable(col).level(table.at(row, col)) == columns[c].level) x[static_cast<Eigen::Index>(c + 1)] = 1.0;
    }
    std::vector<double> probs;
    softmax(coefficients, x, probs);
    return probs;
}

std::size_t LogisticModel::class_of(LevelCode outcome_level) const {
    for (std::size_t c = 0; c < class_levels.size(); ++c) {
        if (std::find(class_levels[c].begin(), class_levels[c].end(), outcome_level) != class_levels[c].end()) {
            return c;
        }
    }
    throw Error(ErrorCode::UnknownLevel, "outcome level not modeled");
}

LogisticModel fit_logistic(const DataTable& table, std::string_view outcome,
                           const std::vector<std::string>& positive_levels,
                           const std::vector<std::string>& predictors, std::span<const double> weights,
                           const FitOptions& options) {
    const auto& var = table.schema().variable(outcome);
    if (positive_levels.empty()) throw Error(ErrorCode::InvalidArgument, "no positive outcome level given");
    std::vector<char> positive(var.level_count(), 0);
    for (const auto& l : positive_levels) positive[var.level_index(l)] = 1;
    LogisticModel m;
    m.outcome = std::string(outcome);
    m.predictors = predictors;
    m.class_levels.resize(2);
    std::string pos_label;
    for (std::size_t l = 0; l < var.level_count(); ++l) {
        m.class_levels[positive[l] ? 1 : 0].push_back(static_cast<LevelCode>(l));
        if (positive[l]) pos_label += (pos_label.empty() ? "" : "|") + var.level(l);
    }
    if (m.class_levels[0].empty()) throw Error(ErrorCode::InvalidArgument, "every level is positive");
    m.class_labels = {"not " + pos_label, pos_label};
    return fit(table, std::move(m), weights, options);
}

LogisticModel fit_multinomial(const DataTable& table, std::string_view outcome,
                              const std::vector<std::string>& predictors, std::span<const double> weights,
                              const FitOptions& options) {
    const auto& var = table.schema().variable(outcome);
    LogisticModel m;
    m.outcome = std::string(outcome);
    m.predictors = predictors;
    m.class_labels.push_back(var.reference_level());
    m.class_levels.push_back({static_cast<LevelCode>(var.reference_index())});
    for (std::size_t l = 0; l < var.level_count(); ++l) {
        if (l == var.reference_index()) continue;
        m.class_labels.push_back(var.level(l));
        m.class_levels.push_back({static_cast<LevelCode>(l)});
    }
    return fit(table, std::move(m), weights, options);
}

double penalized_log_likelihood(const LogisticModel& model, const DataTable& table,
                                std::span<const double> weights, double ridge) {
    const auto outcome_col = table.schema().index_of(model.outcome);
    double ll = 0.0;
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        const double w = weights.empty() ? 1.0 : weights[r];
        const auto probs = model.predict(table, r);
        ll += w * std::log(probs[model.class_of(table.at(r, outcome_col))]);
    }
    return ll - 0.5 * ridge * model.coefficients.squaredNorm();
}

}  // namespace causeway
