#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "causeway/dataset.hpp"

namespace causeway {

inline constexpr double kRidge = 1e-6;
inline constexpr double kGradientTolerance = 1e-8;
inline constexpr std::size_t kMaxIterations = 100;

struct ConvergenceRecord {
    std::size_t iterations = 0;
    double gradient_norm = 0.0;
    bool converged = false;
};

/// One indicator column of the design: `variable == level`.
struct DesignColumn {
    std::string variable;
    std::string level;
};

/// Baseline-category logit. Class 0 is the baseline; coefficient row k-1
/// holds the log-odds of class k against it, over [intercept, columns...].
struct LogisticModel {
    std::string outcome;
    std::vector<std::string> class_labels;
    std::vector<std::vector<LevelCode>> class_levels;  // outcome levels pooled into each class
    std::vector<std::string> predictors;
    std::vector<DesignColumn> columns;
    Eigen::MatrixXd coefficients;
    ConvergenceRecord convergence;

    std::size_t class_count() const noexcept { return class_labels.size(); }
    /// Class probabilities for one data row (schema must contain the predictors).
    std::vector<double> predict(const DataTable& table, std::size_t row) const;
    /// Class holding the given outcome level code.
    std::size_t class_of(LevelCode outcome_level) const;
};

struct FitOptions {
    double ridge = kRidge;
    double tolerance = kGradientTolerance;
    std::size_t max_iterations = kMaxIterations;
};

/// Binary logit of [outcome ∈ positive_levels] on indicator-coded predictors.
/// Fitted by Newton/IRLS on the ridge-penalized likelihood. `weights` (one per
/// row, optional) act as frequency weights. Throws DegenerateOutcome,
/// PerfectSeparation (naming the predictor), UnknownVariable/UnknownLevel or
/// InvalidArgument.
LogisticModel fit_logistic(const DataTable& table, std::string_view outcome,
                           const std::vector<std::string>& positive_levels,
                           const std::vector<std::string>& predictors, std::span<const double> weights = {},
                           const FitOptions& options = {});

/// Baseline-category multinomial logit against the outcome's reference level
/// (class order: reference, then remaining levels in declaration order).
/// Predictors may be empty (intercept-only).
LogisticModel fit_multinomial(const DataTable& table, std::string_view outcome,
                              const std::vector<std::string>& predictors, std::span<const double> weights = {},
                              const FitOptions& options = {});

/// Objective maximized by both fitters, exposed so tests can check optimality
/// with an independent optimizer: Σ w·log π(class) − ridge/2·‖β‖².
double penalized_log_likelihood(const LogisticModel& model, const DataTable& table,
                                std::span<const double> weights, double ridge = kRidge);

}  // namespace causeway
