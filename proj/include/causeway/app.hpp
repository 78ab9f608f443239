#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "causeway/citest.hpp"
#include "causeway/dag.hpp"
#include "causeway/dataset.hpp"
#include "causeway/error.hpp"
#include "causeway/estimate.hpp"
#include "causeway/synth.hpp"

namespace causeway {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Settings that can change an analytical result. Thread count is not one.
struct AnalysisConfig {
    double alpha = kDefaultAlpha;
    CiStatistic statistic = CiStatistic::GSquared;
    ClaimBasis basis = ClaimBasis::LocalMarkov;
    std::size_t replicates = 200;
    std::uint64_t seed = 1;
    Measure measure = Measure::RiskRatio;
    bool stabilize = true;
    bool truncate = false;
    std::size_t threads = 1;
};

Json config_document(const AnalysisConfig& config);
/// FNV-1a over the compact dump of config_document.
std::string config_hash(const AnalysisConfig& config);

/// Study descriptor (study.json): default outcome and its event levels.
struct StudyDescriptor {
    std::string outcome;
    std::vector<std::string> outcome_levels;
    std::string outcome_label;
    std::vector<std::string> treatments;
    std::string unit;
};
StudyDescriptor load_study(const std::string& path);
StudyDescriptor parse_study(std::string_view text);

struct EstimateRequest {
    std::string treatment;
    std::string outcome;
    std::optional<AdjustmentSet> adjustment;  // default: first minimal set
    std::vector<std::string> outcome_levels;   // default: every non-reference level
    bool compare_unadjusted = false;
    bool override_adjustment = false;
};

// Every document carries "format", "tool_version", "report_id" and
// "provenance" {graph_id, graph_version, config_hash}.

Json graph_document(const CausalDag& g, std::uint64_t version);
Json validate_document(const CausalDag& g, std::uint64_t version);
Json implications_document(const CausalDag& g, std::uint64_t version, const DataTable& table,
                           const AnalysisConfig& config);
Json adjustment_document(const CausalDag& g, std::uint64_t version, const std::vector<std::string>& treatments,
                         std::string_view outcome, const AnalysisConfig& config);
Json estimate_document(const CausalDag& g, std::uint64_t version, const DataTable& table,
                       const EstimateRequest& request, const AnalysisConfig& config);
/// Summary of a simulated table (the rows themselves travel as CSV).
Json simulate_document(const ScmSpec& m, std::size_t n, std::uint64_t seed, const DataTable& table);
Json error_document(const Error& e);

/// Plain-text rendering of any document above (dispatch on "format").
std::string render_text(const Json& doc);

/// 0 success/consistent, 1 analytical refusal or inconsistency, 2 input error.
int exit_code_for(const Json& doc);

/// Canonical serialization: 2-space indent, trailing newline.
std::string dump_document(const Json& doc);

std::string fnv1a_hex(std::string_view text);

}  // namespace causeway
