#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "causeway/dag.hpp"
#include "causeway/dataset.hpp"
#include "causeway/logistic.hpp"

namespace causeway {

enum class Measure { RiskRatio, OddsRatio };
enum class Method { Adjusted, Unadjusted };
enum class WeightKind { Unit, Unstabilized, Stabilized };

std::string_view to_string(Measure m);
std::string_view to_string(Method m);
std::string_view to_string(WeightKind k);

struct LevelWeightMean {
    std::string level;
    double mean = 0.0;
};

struct WeightDiagnostics {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    std::vector<LevelWeightMean> mean_by_level;
    bool truncated = false;
};

struct WeightVector {
    std::vector<double> values;
    WeightKind kind = WeightKind::Unit;
    WeightDiagnostics diagnostics;
};

/// Pr(X_i = observed level | Z_i) under a model fitted with the treatment as
/// outcome. Throws SchemaMismatch when the model is for another variable.
std::vector<double> propensity_scores(const LogisticModel& model, const DataTable& table,
                                      std::string_view treatment);

/// Unstabilized 1/score (equal to X/p + (1-X)/(1-p) for a binary treatment) or
/// stabilized Pr(X = x_i)/score with the marginal taken from the table.
/// Throws NonFinite for scores outside (0, 1).
WeightVector ip_weights(std::span<const double> scores, const DataTable& table, std::string_view treatment,
                        bool stabilize);

/// Clamp to the 1st/99th percentiles; diagnostics recomputed.
WeightVector truncate_weights(WeightVector weights, const DataTable& table, std::string_view treatment);

/// Unit weights with diagnostics.
WeightVector unit_weights(const DataTable& table, std::string_view treatment);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

struct EffectEstimate {
    std::string treatment;
    std::string level;
    std::string reference;
    double odds_ratio = 0.0;
    double risk_ratio = 0.0;
    double level_risk = 0.0;      // weighted Pr(outcome | level)
    double reference_risk = 0.0;  // weighted Pr(outcome | reference)
    Measure measure = Measure::RiskRatio;
    Interval interval;  // for `measure`
    AdjustmentSet adjustment;
    Method method = Method::Adjusted;

    double point() const noexcept { return measure == Measure::RiskRatio ? risk_ratio : odds_ratio; }
};

struct EstimatorConfig {
    /// Outcome levels counted as the event; empty means every non-reference level.
    std::vector<std::string> outcome_levels;
    bool stabilize = true;
    bool truncate = false;
    Measure measure = Measure::RiskRatio;
    std::size_t replicates = 200;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    /// Proceed with an adjustment set that fails the back-door criterion.
    bool override_adjustment = false;
    FitOptions fit;
};

struct BootstrapSummary {
    std::size_t replicates = 0;
    std::size_t failures = 0;
};

struct Certification {
    bool checked = false;    // a graph was available
    bool valid = false;      // set passes the back-door criterion
    bool overridden = false;
    std::string note;        // failure explanation when invalid
};

struct EstimationResult {
    std::string treatment;
    std::string outcome;
    std::vector<std::string> outcome_levels;
    Method method = Method::Adjusted;
    AdjustmentSet adjustment;
    Certification certification;
    std::vector<EffectEstimate> contrasts;
    WeightKind weight_kind = WeightKind::Unit;
    WeightDiagnostics weights;
    ConvergenceRecord propensity_convergence;
    ConvergenceRecord outcome_convergence;
    BootstrapSummary bootstrap;
};

/// Propensity model -> (stabilized) IP weights -> weighted outcome logit on
/// treatment indicators. One contrast per non-reference treatment level.
/// With `graph`, the adjustment set is certified by the back-door criterion
/// and InvalidAdjustment is thrown unless overridden.
EstimationResult estimate_effect(const DataTable& table, std::string_view treatment, std::string_view outcome,
                                 const AdjustmentSet& adjustment, const EstimatorConfig& config,
                                 const CausalDag* graph = nullptr);

/// Same pipeline with no adjustment and unit weights.
EstimationResult unadjusted_estimate(const DataTable& table, std::string_view treatment,
                                     std::string_view outcome, const EstimatorConfig& config);

/// Point estimates only (no bootstrap); returns odds and risk ratios per contrast.
struct PointEstimate {
    std::vector<double> odds_ratio;
    std::vector<double> risk_ratio;
    std::vector<double> level_risk;
    double reference_risk = 0.0;
    WeightVector weights;
    ConvergenceRecord propensity_convergence;
    ConvergenceRecord outcome_convergence;
};
PointEstimate point_estimate(const DataTable& table, std::string_view treatment, std::string_view outcome,
                             const std::vector<std::string>& outcome_levels, const AdjustmentSet& adjustment,
                             const EstimatorConfig& config);

using Estimator = std::function<std::vector<double>(const DataTable&)>;

struct BootstrapResult {
    std::vector<Interval> intervals;  // one per estimator component
    BootstrapSummary summary;
};

/// Percentile 2.5/97.5 bounds over row-resampled re-estimates. Replicate r
/// resamples with CounterRng(derive(seed, r)). Replicates whose estimator
/// throws are dropped and counted; more than 20% failing throws
/// TooManyFailures. Requires replicates >= 100.
BootstrapResult bootstrap_ci(const DataTable& table, const Estimator& estimator, std::size_t replicates,
                             std::uint64_t seed, std::size_t threads = 1);

/// Positive outcome levels after applying the "every non-reference level" default.
std::vector<std::string> resolve_outcome_levels(const Schema& schema, std::string_view outcome,
                                                const std::vector<std::string>& requested);

}  // namespace causeway
