#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "refer/gateway.hpp"
#include "refer/rational.hpp"
#include "refer/types.hpp"

namespace refer {

enum class CorrelationKind { Spearman, KendallTauB };
std::string_view to_string(CorrelationKind k);

struct Correlation {
    double value = 0.0;
    CorrelationKind kind = CorrelationKind::Spearman;
    std::size_t n_pairs = 0;
};

/// Pearson correlation of average ranks.
/// Throws Error{LengthMismatch} on unequal or short input, Error{DegenerateInput}
/// when either side is constant.
Correlation spearman(std::span<const double> x, std::span<const double> y);

/// Tie-corrected Kendall tau in O(n log n).
Correlation kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// Exact-match fraction. Throws Error{LengthMismatch}, including for empty input.
double accuracy(std::span<const Answer> pred, std::span<const Answer> gold);

struct PartitionCounts {
    std::int64_t peer_right_ac_right = 0;
    std::int64_t peer_right_ac_wrong = 0;
    std::int64_t peers_wrong_ac_right = 0;
    std::int64_t peers_wrong_ac_wrong = 0;
    std::optional<Rational> threshold_fraction;  // rating mode

    std::int64_t total() const {
        return peer_right_ac_right + peer_right_ac_wrong + peers_wrong_ac_right + peers_wrong_ac_wrong;
    }
    friend bool operator==(const PartitionCounts&, const PartitionCounts&) = default;
};

/// Rating mode: a score is correct when |s - truth| <= fraction * (max - min).
/// Throws Error{MissingScale}, Error{LengthMismatch}.
PartitionCounts error_partition(const std::vector<std::vector<Rational>>& peer_scores,
                                const std::vector<Rational>& ac_scores, const std::vector<Rational>& truth,
                                const std::optional<ScoreScale>& scale, const Rational& threshold_fraction);

/// Reasoning mode: correct means an exact match with the gold answer.
PartitionCounts error_partition(const std::vector<std::vector<Answer>>& peer_answers,
                                const std::vector<Answer>& ac_answers, const std::vector<Answer>& gold);

struct TTest {
    double t = 0.0;
    double p = 1.0;
    std::size_t n = 0;
};

/// Two-sided paired t-test on a[i] - b[i].
/// Throws Error{LengthMismatch}, Error{DegenerateVariance}.
TTest paired_ttest(std::span<const double> a, std::span<const double> b);

/// Each method's cost over the largest. Throws Error{AllZeroCosts}.
std::map<std::string, double> relative_costs(const std::map<std::string, Rational>& cost_by_method);
std::map<std::string, double> relative_costs(const CostLedger& ledger);

}  // namespace refer
