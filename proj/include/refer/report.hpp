#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "refer/metrics.hpp"
#include "refer/orchestrator.hpp"

namespace refer {

inline constexpr int kReportFormatVersion = 1;

/// Final scores (or answers) of a run matched to the dataset's ground truth.
/// Throws Error{IdMismatch} unless the run covers exactly the dataset's ids.
void check_alignment(const RunRecord& run, const Dataset& dataset);

struct CorrelationRow {
    std::string metric;
    std::size_t n_pairs = 0;
    std::size_t failures = 0;
    std::optional<double> spearman;  // empty when undefined (constant input)
    std::optional<double> kendall_tau_b;
};

struct CorrelationReport {
    std::string dataset;
    std::string method;
    std::vector<CorrelationRow> rows;
    std::optional<double> mean_spearman;
    std::optional<double> mean_kendall_tau_b;
};

/// Per-metric correlations of final scores against human scores. Failed
/// entries are left out and counted.
CorrelationReport correlate_run(const RunRecord& run, const Dataset& dataset);

std::string correlation_tsv(const CorrelationReport& report);
nlohmann::ordered_json correlation_json(const CorrelationReport& report);

struct AccuracyRow {
    std::size_t total = 0;
    std::size_t correct = 0;
    std::size_t failures = 0;  // counted as wrong
    double accuracy = 0.0;
};

/// Exact-match accuracy of final answers against gold answers.
AccuracyRow accuracy_of_run(const RunRecord& run, const Dataset& dataset);

// ---- combined report -----------------------------------------------------------

enum class TTestVariable { Scores, AbsErrors };
std::string_view to_string(TTestVariable v);
std::optional<TTestVariable> parse_ttest_variable(std::string_view text);

struct ReportRow {
    std::string method;
    std::string label;  // "mean" for the averaged row, else the run label
    bool averaged = false;
    std::vector<std::optional<double>> spearman;  // one per metric
    std::vector<std::optional<double>> kendall_tau_b;
    std::optional<double> accuracy;
    Rational cost;
    std::optional<double> relative_cost;  // empty when every cost is zero
    double mean_latency_us = 0.0;
    std::size_t failures = 0;
};

struct TTestRow {
    std::string metric;
    std::string method_a;
    std::string method_b;
    std::size_t n = 0;
    std::optional<TTest> result;  // empty when the differences are constant
};

struct CombinedReport {
    TaskKind task_kind = TaskKind::Rating;
    std::vector<std::string> metrics;
    std::vector<ReportRow> rows;
    std::vector<TTestRow> ttests;
    TTestVariable ttest_variable = TTestVariable::Scores;
};

/// Groups runs by method (first-seen order); each group gets an averaged row
/// followed by its per-run rows. Relative costs are taken against the largest
/// row of the same kind. Paired t-tests compare every later method with the
/// first one, per metric, on per-sample values averaged over each method's runs.
///
/// Throws Error{MixedTaskKinds}, Error{IdMismatch}, Error{InvalidRequest}.
CombinedReport build_report(const std::vector<std::pair<std::string, RunRecord>>& runs, const Dataset& dataset,
                            TTestVariable variable = TTestVariable::Scores);

std::string report_tsv(const CombinedReport& report);
nlohmann::ordered_json report_json(const CombinedReport& report);

}  // namespace refer
