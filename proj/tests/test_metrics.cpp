#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "refer/error.hpp"
#include "refer/metrics.hpp"

using namespace refer;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::IOFailure;
}

std::vector<Rational> R(std::initializer_list<int> v) {
    std::vector<Rational> out;
    for (int x : v) out.emplace_back(x);
    return out;
}

}  // namespace

TEST(Correlation, SpearmanExample) {
    const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 1, 4, 3, 5};
    // 1 - 6 * 4 / (5 * 24)
    EXPECT_NEAR(spearman(x, y).value, 0.8, 1e-12);
    const std::vector<double> a{1, 2, 2, 3}, b{1, 2, 3, 4};
    EXPECT_NEAR(spearman(a, b).value, oracle::spearman(a, b), 1e-12);
    EXPECT_NEAR(spearman(a, b).value, 3.0 / std::sqrt(10.0), 1e-12);
}

TEST(Correlation, KendallTauBWithTies) {
    const std::vector<double> x{1, 2, 2, 3}, y{1, 2, 3, 4};
    EXPECT_NEAR(kendall_tau_b(x, y).value, 5.0 / std::sqrt(30.0), 1e-12);
    EXPECT_EQ(kendall_tau_b(x, y).n_pairs, 4u);
    EXPECT_EQ(kendall_tau_b(x, y).kind, CorrelationKind::KendallTauB);
}

TEST(Correlation, PerfectAndReversed) {
    const std::vector<double> x{1, 2, 3, 4}, y{10, 20, 30, 40}, z{4, 3, 2, 1};
    EXPECT_DOUBLE_EQ(spearman(x, y).value, 1.0);
    EXPECT_DOUBLE_EQ(kendall_tau_b(x, y).value, 1.0);
    EXPECT_DOUBLE_EQ(spearman(x, z).value, -1.0);
    EXPECT_DOUBLE_EQ(kendall_tau_b(x, z).value, -1.0);
}

TEST(Correlation, Errors) {
    const std::vector<double> one{1}, two{1, 2}, three{1, 2, 3}, flat{2, 2, 2};
    EXPECT_EQ(code_of([&] { spearman(two, three); }), ErrorCode::LengthMismatch);
    EXPECT_EQ(code_of([&] { kendall_tau_b(one, one); }), ErrorCode::LengthMismatch);
    EXPECT_EQ(code_of([&] { spearman(three, flat); }), ErrorCode::DegenerateInput);
    EXPECT_EQ(code_of([&] { kendall_tau_b(flat, three); }), ErrorCode::DegenerateInput);
}

TEST(CorrelationProperty, MatchesBruteForceOracles) {
    std::mt19937 rng(20240611);
    std::uniform_int_distribution<int> len(2, 8), val(1, 4);
    int checked = 0;
    while (checked < 1000) {
        const int n = len(rng);
        std::vector<double> x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x[i] = val(rng);
            y[i] = val(rng);
        }
        if (std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end() ||
            std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) == y.end())
            continue;
        ASSERT_NEAR(spearman(x, y).value, oracle::spearman(x, y), 1e-12);
        ASSERT_NEAR(kendall_tau_b(x, y).value, oracle::kendall_tau_b(x, y), 1e-12);
        ++checked;
    }
}

TEST(CorrelationProperty, InvariantUnderMonotoneTransforms) {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(12), y(12), fx(12);
        for (int i = 0; i < 12; ++i) {
            x[i] = std::round(u(rng));
            y[i] = u(rng);
            fx[i] = std::exp(x[i]) * 3 + 7;
        }
        if (std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end()) continue;
        EXPECT_NEAR(spearman(x, y).value, spearman(fx, y).value, 1e-12);
        EXPECT_NEAR(kendall_tau_b(x, y).value, kendall_tau_b(fx, y).value, 1e-12);
        // symmetric in its arguments
        EXPECT_NEAR(kendall_tau_b(x, y).value, kendall_tau_b(y, x).value, 1e-12);
        EXPECT_NEAR(spearman(x, y).value, spearman(y, x).value, 1e-12);
        const double t = kendall_tau_b(x, y).value;
        EXPECT_LE(std::fabs(t), 1.0);
    }
}

TEST(CorrelationProperty, LargeInputsMatchOracle) {
    std::mt19937 rng(77);
    std::uniform_int_distribution<int> val(1, 10);
    std::vector<double> x(400), y(400);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = val(rng);
        y[i] = x[i] + val(rng) % 4;
    }
    EXPECT_NEAR(kendall_tau_b(x, y).value, oracle::kendall_tau_b(x, y), 1e-12);
    EXPECT_NEAR(spearman(x, y).value, oracle::spearman(x, y), 1e-12);
}

TEST(Accuracy, ExactMatch) {
    const std::vector<Answer> pred{Answer::label('A'), Answer::label('B'), Answer::number(Rational(3))};
    const std::vector<Answer> gold{Answer::label('A'), Answer::label('C'), Answer::number(Rational(3))};
    EXPECT_DOUBLE_EQ(accuracy(pred, gold), 2.0 / 3.0);
    EXPECT_EQ(code_of([] { accuracy({}, {}); }), ErrorCode::LengthMismatch);
    EXPECT_EQ(code_of([&] { accuracy(pred, std::span<const Answer>(gold).first(2)); }), ErrorCode::LengthMismatch);
}

TEST(ErrorPartition, RatingExample) {
    const ScoreScale scale{Rational(1), Rational(3), Granularity::Integer};
    const auto c = error_partition({R({3, 1, 2})}, {Rational(13, 5)}, {Rational(3)}, scale, Rational(1, 4));
    EXPECT_EQ(c.peer_right_ac_right, 1);
    EXPECT_EQ(c.total(), 1);
    EXPECT_EQ(*c.threshold_fraction, Rational(1, 4));
}

TEST(ErrorPartition, BoundaryIsInclusive) {
    const ScoreScale scale{Rational(1), Rational(5), Granularity::Integer};
    // threshold = 0.25 * 4 = 1
    const auto c = error_partition({R({2}), R({1})}, {Rational(4), Rational(3)}, {Rational(3), Rational(3)}, scale,
                                   Rational(1, 4));
    EXPECT_EQ(c.peer_right_ac_right, 1);
    EXPECT_EQ(c.peers_wrong_ac_right, 1);
}

TEST(ErrorPartition, ReasoningExample) {
    const auto c = error_partition(std::vector<std::vector<Answer>>{{Answer::label('B'), Answer::label('B')}},
                                   {Answer::label('C')}, {Answer::label('C')});
    EXPECT_EQ(c.peers_wrong_ac_right, 1);
    EXPECT_FALSE(c.threshold_fraction);
}

TEST(ErrorPartition, Errors) {
    EXPECT_EQ(code_of([] { error_partition({R({1})}, R({1}), R({1}), std::nullopt, Rational(1, 4)); }),
              ErrorCode::MissingScale);
    const ScoreScale scale{Rational(1), Rational(5), Granularity::Integer};
    EXPECT_EQ(code_of([&] { error_partition({R({1})}, R({1, 2}), R({1}), scale, Rational(1, 4)); }),
              ErrorCode::LengthMismatch);
}

TEST(ErrorPartitionProperty, MonotoneInThreshold) {
    std::mt19937 rng(4);
    std::uniform_int_distribution<int> v(1, 5);
    const ScoreScale scale{Rational(1), Rational(5), Granularity::Integer};
    std::vector<std::vector<Rational>> peers;
    std::vector<Rational> ac, truth;
    for (int i = 0; i < 300; ++i) {
        peers.push_back({Rational(v(rng)), Rational(v(rng)), Rational(v(rng))});
        ac.emplace_back((v(rng) % 4 + 1) * 10 + v(rng), 10);  // 1.1 .. 4.5
        truth.emplace_back(v(rng));
    }
    std::int64_t prev_ac_right = -1, prev_peer_right = -1;
    for (int k = 0; k <= 8; ++k) {
        const auto c = error_partition(peers, ac, truth, scale, Rational(k, 8));
        EXPECT_EQ(c.total(), 300);
        const auto ac_right = c.peer_right_ac_right + c.peers_wrong_ac_right;
        const auto peer_right = c.peer_right_ac_right + c.peer_right_ac_wrong;
        EXPECT_GE(ac_right, prev_ac_right);
        EXPECT_GE(peer_right, prev_peer_right);
        prev_ac_right = ac_right;
        prev_peer_right = peer_right;
    }
    EXPECT_EQ(prev_ac_right, 300);  // fraction 1 covers the whole scale
}

TEST(TTest, KnownDifferences) {
    // d = [1, 2, 3, 4, 5]: mean 3, sd sqrt(2.5), t = 3 / (sqrt(2.5) / sqrt(5))
    const std::vector<double> a{2, 4, 6, 8, 10}, b{1, 2, 3, 4, 5};
    const auto r = paired_ttest(a, b);
    EXPECT_NEAR(r.t, 3.0 / std::sqrt(0.5), 1e-12);
    EXPECT_EQ(r.n, 5u);
    EXPECT_NEAR(r.p, oracle::two_sided_p(r.t, 4), 1e-9);
}

TEST(TTest, ZeroMeanGivesPOne) {
    const std::vector<double> a{1, -1, 1, -1}, b{0, 0, 0, 0};
    const auto r = paired_ttest(a, b);
    EXPECT_DOUBLE_EQ(r.t, 0.0);
    EXPECT_DOUBLE_EQ(r.p, 1.0);
}

TEST(TTest, Errors) {
    const std::vector<double> a{1, 2, 3}, b{0, 1, 2};
    EXPECT_EQ(code_of([&] { paired_ttest(a, b); }), ErrorCode::DegenerateVariance);
    EXPECT_EQ(code_of([&] { paired_ttest(a, std::span<const double>(b).first(2)); }), ErrorCode::LengthMismatch);
}

TEST(TTestProperty, PValuesMatchQuadrature) {
    std::mt19937 rng(123);
    std::normal_distribution<double> noise(0.3, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + trial;
        std::vector<double> a(n), b(n, 0.0);
        for (auto& x : a) x = noise(rng);
        const auto r = paired_ttest(a, b);
        EXPECT_NEAR(r.p, oracle::two_sided_p(r.t, n - 1), 1e-8) << n;
        // swapping the arguments flips t and keeps p
        const auto s = paired_ttest(b, a);
        EXPECT_NEAR(s.t, -r.t, 1e-12);
        EXPECT_NEAR(s.p, r.p, 1e-15);
    }
}

TEST(RelativeCosts, DividesByLargest) {
    const auto rel = relative_costs(std::map<std::string, Rational>{{"a", Rational(3, 2)}, {"b", Rational(6)},
                                                                    {"c", Rational(0)}});
    EXPECT_DOUBLE_EQ(rel.at("a"), 0.25);
    EXPECT_DOUBLE_EQ(rel.at("b"), 1.0);
    EXPECT_DOUBLE_EQ(rel.at("c"), 0.0);
    EXPECT_EQ(code_of([] { relative_costs(std::map<std::string, Rational>{{"a", Rational(0)}}); }),
              ErrorCode::AllZeroCosts);

    CostLedger ledger;
    ledger.add("x", "m1", LedgerEntry{1, 0, 0, Rational(1), 0});
    ledger.add("x", "m2", LedgerEntry{1, 0, 0, Rational(1), 0});
    ledger.add("y", "m1", LedgerEntry{1, 0, 0, Rational(1), 0});
    EXPECT_DOUBLE_EQ(relative_costs(ledger).at("y"), 0.5);
}
