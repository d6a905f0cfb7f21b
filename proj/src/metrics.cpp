#include "refer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "refer/error.hpp"

namespace refer {

std::string_view to_string(CorrelationKind k) { return k == CorrelationKind::Spearman ? "spearman" : "kendall_tau_b"; }

namespace {

void check_pair(std::size_t nx, std::size_t ny, std::size_t min_len) {
    if (nx != ny)
        throw Error(ErrorCode::LengthMismatch, "sequence lengths differ (" + std::to_string(nx) + " vs " +
                                                   std::to_string(ny) + ")");
    if (nx < min_len)
        throw Error(ErrorCode::LengthMismatch, "need at least " + std::to_string(min_len) + " pairs, got " +
                                                   std::to_string(nx));
}

void check_not_constant(std::span<const double> v, const char* which) {
    if (std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end())
        throw Error(ErrorCode::DegenerateInput, std::string(which) + " is constant; correlation is undefined");
}

// Twice the average rank, so ties stay integral.
std::vector<std::int64_t> doubled_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<std::int64_t> rank(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        // positions i..j (0-based) share rank (i+1 + j+1) / 2
        const auto r2 = static_cast<std::int64_t>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r2;
        i = j + 1;
    }
    return rank;
}

std::int64_t tied_pairs(std::span<const std::size_t> sorted_idx, auto same) {
    std::int64_t total = 0;
    std::int64_t run = 1;
    for (std::size_t i = 1; i < sorted_idx.size(); ++i) {
        if (same(sorted_idx[i - 1], sorted_idx[i])) {
            ++run;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    return total + run * (run - 1) / 2;
}

// Sorts idx[lo, hi) by key, counting inversions (strictly greater before smaller).
std::int64_t merge_count(std::vector<std::size_t>& idx, std::vector<std::size_t>& buf, std::size_t lo, std::size_t hi,
                         std::span<const double> key) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t swaps = merge_count(idx, buf, lo, mid, key) + merge_count(idx, buf, mid, hi, key);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (key[idx[j]] < key[idx[i]]) {
            swaps += static_cast<std::int64_t>(mid - i);
            buf[k++] = idx[j++];
        } else {
            buf[k++] = idx[i++];
        }
    }
    while (i < mid) buf[k++] = idx[i++];
    while (j < hi) buf[k++] = idx[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              idx.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

}  // namespace

Correlation spearman(std::span<const double> x, std::span<const double> y) {
    check_pair(x.size(), y.size(), 2);
    check_not_constant(x, "x");
    check_not_constant(y, "y");
    const auto rx = doubled_ranks(x);
    const auto ry = doubled_ranks(y);
    const auto n = static_cast<std::int64_t>(x.size());
    std::int64_t sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += rx[i];
        sy += ry[i];
        sxx += rx[i] * rx[i];
        syy += ry[i] * ry[i];
        sxy += rx[i] * ry[i];
    }
    const double cov = static_cast<double>(n * sxy - sx * sy);
    const double vx = static_cast<double>(n * sxx - sx * sx);
    const double vy = static_cast<double>(n * syy - sy * sy);
    const double r = std::clamp(cov / std::sqrt(vx * vy), -1.0, 1.0);
    return Correlation{r, CorrelationKind::Spearman, x.size()};
}

Correlation kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    check_pair(x.size(), y.size(), 2);
    check_not_constant(x, "x");
    check_not_constant(y, "y");
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
    });
    const std::int64_t n1 = tied_pairs(idx, [&](std::size_t a, std::size_t b) { return x[a] == x[b]; });
    const std::int64_t n3 =
        tied_pairs(idx, [&](std::size_t a, std::size_t b) { return x[a] == x[b] && y[a] == y[b]; });
    std::vector<std::size_t> buf(n);
    const std::int64_t swaps = merge_count(idx, buf, 0, n, y);
    const std::int64_t n2 = tied_pairs(idx, [&](std::size_t a, std::size_t b) { return y[a] == y[b]; });
    const auto nn = static_cast<std::int64_t>(n);
    const std::int64_t n0 = nn * (nn - 1) / 2;
    const std::int64_t numerator = n0 - n1 - n2 + n3 - 2 * swaps;
    const double denom = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
    const double tau = std::clamp(static_cast<double>(numerator) / denom, -1.0, 1.0);
    return Correlation{tau, CorrelationKind::KendallTauB, n};
}

double accuracy(std::span<const Answer> pred, std::span<const Answer> gold) {
    check_pair(pred.size(), gold.size(), 1);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == gold[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

namespace {

template <typename T, typename Correct>
PartitionCounts partition(const std::vector<std::vector<T>>& peers, const std::vector<T>& ac,
                          const std::vector<T>& truth, Correct correct) {
    check_pair(peers.size(), ac.size(), 0);
    check_pair(ac.size(), truth.size(), 0);
    PartitionCounts out;
    for (std::size_t i = 0; i < ac.size(); ++i) {
        const bool any_peer =
            std::any_of(peers[i].begin(), peers[i].end(), [&](const T& s) { return correct(s, truth[i]); });
        const bool ac_ok = correct(ac[i], truth[i]);
        if (any_peer) ++(ac_ok ? out.peer_right_ac_right : out.peer_right_ac_wrong);
        else ++(ac_ok ? out.peers_wrong_ac_right : out.peers_wrong_ac_wrong);
    }
    return out;
}

}  // namespace

PartitionCounts error_partition(const std::vector<std::vector<Rational>>& peer_scores,
                                const std::vector<Rational>& ac_scores, const std::vector<Rational>& truth,
                                const std::optional<ScoreScale>& scale, const Rational& threshold_fraction) {
    if (!scale) throw Error(ErrorCode::MissingScale, "rating error partition needs a score scale");
    if (threshold_fraction < Rational(0))
        throw Error(ErrorCode::InvalidRequest, "threshold fraction must be non-negative");
    const Rational band = threshold_fraction * scale->range();
    auto out = partition(peer_scores, ac_scores, truth,
                         [&](const Rational& s, const Rational& t) { return (s - t).abs() <= band; });
    out.threshold_fraction = threshold_fraction;
    return out;
}

PartitionCounts error_partition(const std::vector<std::vector<Answer>>& peer_answers,
                                const std::vector<Answer>& ac_answers, const std::vector<Answer>& gold) {
    return partition(peer_answers, ac_answers, gold, [](const Answer& a, const Answer& g) { return a == g; });
}

TTest paired_ttest(std::span<const double> a, std::span<const double> b) {
    check_pair(a.size(), b.size(), 2);
    const std::size_t n = a.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    if (std::adjacent_find(d.begin(), d.end(), std::not_equal_to<>()) == d.end())
        throw Error(ErrorCode::DegenerateVariance, "all paired differences are equal");
    const double nd = static_cast<double>(n);
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / nd;
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (nd - 1.0));
    const double t = mean / (sd / std::sqrt(nd));
    boost::math::students_t dist(nd - 1.0);
    const double p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
    return TTest{t, p, n};
}

std::map<std::string, double> relative_costs(const std::map<std::string, Rational>& cost_by_method) {
    Rational top;
    for (const auto& [_, c] : cost_by_method) top = std::max(top, c);
    if (top == Rational(0)) throw Error(ErrorCode::AllZeroCosts, "no method has a positive cost");
    std::map<std::string, double> out;
    for (const auto& [m, c] : cost_by_method) out[m] = (c / top).to_double();
    return out;
}

std::map<std::string, double> relative_costs(const CostLedger& ledger) { return relative_costs(ledger.cost_by_method()); }

}  // namespace refer
