#include <gtest/gtest.h>

#include <cmath>

#include "harness.hpp"
#include "oracles.hpp"
#include "refer/error.hpp"
#include "refer/report.hpp"

using namespace refer;
using namespace refer::testing;

namespace {

const ScoreScale kScale = scale_1_to(5);

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::IOFailure;
}

Dataset two_metric_dataset(std::size_t n) {
    Dataset ds = doc_dataset(n, "coherence", kScale);
    ds.metrics.push_back("fluency");
    for (std::size_t i = 0; i < n; ++i) {
        ds.samples[i].human_scores["coherence"] = Rational(1 + static_cast<int>(i % 5));
        ds.samples[i].human_scores["fluency"] = Rational(5 - static_cast<int>((i * 3) % 5));
    }
    return ds;
}

// A run whose final scores are score(i, metric); cost and latency given per run.
RunRecord synthetic_run(const Dataset& ds, const std::string& method,
                        const std::function<Rational(std::size_t, const std::string&)>& score, Rational cost = Rational(1),
                        std::int64_t latency_us = 100) {
    RunRecord run;
    run.info.method = method;
    run.info.task_kind = TaskKind::Rating;
    run.info.dataset = ds.name;
    run.info.metrics = ds.metrics;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        for (const auto& m : ds.metrics) {
            SampleVerdict v;
            v.sample_id = ds.samples[i].id;
            v.metric = m;
            v.ac.final_score = score(i, m);
            v.ac.responses = {ReviewOutcome{"", *v.ac.final_score, ""}};
            v.timing.total_us = latency_us;
            run.entries.push_back(v);
        }
    }
    run.ledger.add(method, "chair", LedgerEntry{1, 10, 10, cost, 0});
    return run;
}

std::vector<double> column(const Dataset& ds, const std::string& m,
                           const std::function<Rational(std::size_t, const std::string&)>& f) {
    std::vector<double> out;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) out.push_back(f(i, m).to_double());
    return out;
}

}  // namespace

TEST(Correlate, IdentityGivesOne) {
    const auto ds = two_metric_dataset(10);
    const auto run = synthetic_run(ds, "m", [&](std::size_t i, const std::string& m) {
        return ds.samples[i].human_scores.at(m);
    });
    const auto rep = correlate_run(run, ds);
    ASSERT_EQ(rep.rows.size(), 2u);
    for (const auto& row : rep.rows) {
        EXPECT_DOUBLE_EQ(*row.spearman, 1.0);
        EXPECT_DOUBLE_EQ(*row.kendall_tau_b, 1.0);
        EXPECT_EQ(row.n_pairs, 10u);
    }
    EXPECT_DOUBLE_EQ(*rep.mean_spearman, 1.0);
}

TEST(Correlate, MatchesOraclesAndSkipsFailures) {
    const auto ds = two_metric_dataset(12);
    auto f = [](std::size_t i, const std::string& m) { return Rational(static_cast<std::int64_t>((i * 7 + m.size()) % 9), 2); };
    auto run = synthetic_run(ds, "m", f);
    run.entries[4] = SampleFailure{ds.samples[2].id, "coherence", ErrorCode::ACFailure, "x", {}};
    const auto rep = correlate_run(run, ds);

    std::vector<double> x, y;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        if (i == 2) continue;
        x.push_back(f(i, "coherence").to_double());
        y.push_back(ds.samples[i].human_scores.at("coherence").to_double());
    }
    EXPECT_EQ(rep.rows[0].failures, 1u);
    EXPECT_EQ(rep.rows[0].n_pairs, 11u);
    EXPECT_NEAR(*rep.rows[0].spearman, oracle::spearman(x, y), 1e-12);
    EXPECT_NEAR(*rep.rows[0].kendall_tau_b, oracle::kendall_tau_b(x, y), 1e-12);
}

TEST(Correlate, IdMismatch) {
    const auto ds = two_metric_dataset(4);
    auto run = synthetic_run(ds, "m", [](std::size_t, const std::string&) { return Rational(3); });
    auto scrambled = run;
    std::get<SampleVerdict>(scrambled.entries[0]).sample_id = "zz";
    std::get<SampleVerdict>(scrambled.entries[1]).sample_id = "zz";
    EXPECT_EQ(code_of([&] { correlate_run(scrambled, ds); }), ErrorCode::IdMismatch);
    auto partial = run;
    partial.entries.resize(2);
    EXPECT_EQ(code_of([&] { correlate_run(partial, ds); }), ErrorCode::IdMismatch);
}

TEST(Correlate, ConstantScoresAreNA) {
    const auto ds = two_metric_dataset(5);
    const auto run = synthetic_run(ds, "m", [](std::size_t, const std::string&) { return Rational(3); });
    const auto rep = correlate_run(run, ds);
    EXPECT_FALSE(rep.rows[0].spearman);
    const std::string tsv = correlation_tsv(rep);
    EXPECT_EQ(tsv.rfind("# refer-correlation v1\n", 0), 0u);
    EXPECT_NE(tsv.find("NA"), std::string::npos);
    EXPECT_EQ(correlation_json(rep)["rows"][0]["spearman"], nullptr);
}

TEST(Report, ThreeRunsAveraged) {
    const auto ds = two_metric_dataset(10);
    std::vector<std::pair<std::string, RunRecord>> runs;
    std::vector<std::function<Rational(std::size_t, const std::string&)>> fs;
    for (int r = 0; r < 3; ++r)
        fs.push_back([r](std::size_t i, const std::string&) { return Rational(static_cast<std::int64_t>((i * (r + 2)) % 7)); });
    for (int r = 0; r < 3; ++r)
        runs.emplace_back("run" + std::to_string(r), synthetic_run(ds, "turbo", fs[r], Rational(r + 1), 100 * (r + 1)));
    const auto rep = build_report(runs, ds);
    ASSERT_EQ(rep.rows.size(), 4u);
    EXPECT_TRUE(rep.rows[0].averaged);
    EXPECT_EQ(rep.rows[0].label, "mean");
    EXPECT_EQ(rep.rows[1].label, "run0");
    double expected = 0;
    for (int r = 0; r < 3; ++r) {
        const double rho = oracle::spearman(column(ds, "coherence", fs[r]), column(ds, "coherence", [&](std::size_t i, const std::string& m) {
                                                return ds.samples[i].human_scores.at(m);
                                            }));
        EXPECT_NEAR(*rep.rows[1 + r].spearman[0], rho, 1e-12);
        expected += rho / 3;
    }
    EXPECT_NEAR(*rep.rows[0].spearman[0], expected, 1e-12);
    EXPECT_DOUBLE_EQ(rep.rows[0].mean_latency_us, 200.0);
    EXPECT_EQ(rep.rows[0].cost, Rational(2));
    EXPECT_DOUBLE_EQ(*rep.rows[3].relative_cost, 1.0);
    EXPECT_NEAR(*rep.rows[1].relative_cost, 1.0 / 3.0, 1e-15);
    EXPECT_TRUE(rep.ttests.empty());
}

TEST(Report, SingleRunAverageEqualsRun) {
    const auto ds = two_metric_dataset(8);
    const auto run = synthetic_run(ds, "lite", [](std::size_t i, const std::string&) { return Rational(static_cast<std::int64_t>(i % 4)); });
    const auto rep = build_report({{"only", run}}, ds);
    ASSERT_EQ(rep.rows.size(), 2u);
    EXPECT_EQ(rep.rows[0].spearman, rep.rows[1].spearman);
    EXPECT_EQ(rep.rows[0].kendall_tau_b, rep.rows[1].kendall_tau_b);
    EXPECT_DOUBLE_EQ(*rep.rows[0].relative_cost, 1.0);
}

TEST(Report, CostColumnMaxIsOne) {
    const auto ds = two_metric_dataset(8);
    auto f = [](std::size_t i, const std::string&) { return Rational(static_cast<std::int64_t>(i % 4)); };
    const auto rep = build_report({{"a", synthetic_run(ds, "lite", f, Rational(1, 3))},
                                   {"b", synthetic_run(ds, "turbo", f, Rational(5))},
                                   {"c", synthetic_run(ds, "peer", f, Rational(1, 10))}},
                                  ds);
    double max_avg = 0;
    for (const auto& row : rep.rows)
        if (row.averaged) max_avg = std::max(max_avg, *row.relative_cost);
    EXPECT_DOUBLE_EQ(max_avg, 1.0);
    EXPECT_NEAR(*rep.rows[0].relative_cost, 1.0 / 15.0, 1e-15);
}

TEST(Report, PairedTTestAgainstFirstMethod) {
    const auto ds = two_metric_dataset(10);
    auto a = [](std::size_t i, const std::string&) { return Rational(static_cast<std::int64_t>(i % 5) + 1); };
    auto b = [](std::size_t i, const std::string&) { return Rational(static_cast<std::int64_t>((i * i) % 5)); };
    const auto rep = build_report({{"x", synthetic_run(ds, "A", a)}, {"y", synthetic_run(ds, "B", b)}}, ds);
    ASSERT_EQ(rep.ttests.size(), 2u);
    EXPECT_EQ(rep.ttests[0].method_a, "A");
    EXPECT_EQ(rep.ttests[0].method_b, "B");
    const auto xa = column(ds, "coherence", a), xb = column(ds, "coherence", b);
    double mean = 0, var = 0;
    for (std::size_t i = 0; i < xa.size(); ++i) mean += (xa[i] - xb[i]) / xa.size();
    for (std::size_t i = 0; i < xa.size(); ++i) var += std::pow(xa[i] - xb[i] - mean, 2) / (xa.size() - 1);
    const double t = mean / std::sqrt(var / xa.size());
    EXPECT_NEAR(rep.ttests[0].result->t, t, 1e-12);
    EXPECT_NEAR(rep.ttests[0].result->p, oracle::two_sided_p(t, xa.size() - 1), 1e-8);
}

TEST(Report, MixedTaskKinds) {
    const auto ds = two_metric_dataset(4);
    auto rating = synthetic_run(ds, "m", [](std::size_t, const std::string&) { return Rational(1); });
    auto reasoning = rating;
    reasoning.info.task_kind = TaskKind::Reasoning;
    EXPECT_EQ(code_of([&] { build_report({{"a", rating}, {"b", reasoning}}, ds); }), ErrorCode::MixedTaskKinds);
}

TEST(Report, TsvAndJsonAreVersioned) {
    const auto ds = two_metric_dataset(6);
    const auto run = synthetic_run(ds, "m", [](std::size_t i, const std::string&) { return Rational(static_cast<std::int64_t>(i)); });
    const auto rep = build_report({{"r1", run}}, ds);
    EXPECT_EQ(report_tsv(rep).rfind("# refer-report v1\n", 0), 0u);
    EXPECT_EQ(report_json(rep)["format"], "refer-report");
    EXPECT_EQ(report_json(rep)["version"], 1);
}

TEST(Accuracy, FailuresCountAsWrong) {
    Dataset ds;
    ds.name = "quiz";
    ds.kind = DatasetKind::Reasoning;
    ds.metrics = {"answer"};
    RunRecord run;
    run.info.task_kind = TaskKind::Reasoning;
    for (int i = 0; i < 4; ++i) {
        Sample s;
        s.id = "q" + std::to_string(i);
        s.gold_answer = Answer::label('A');
        ds.samples.push_back(s);
        if (i == 3) {
            run.entries.push_back(SampleFailure{s.id, "answer", ErrorCode::ACFailure, "", {}});
            continue;
        }
        SampleVerdict v;
        v.sample_id = s.id;
        v.metric = "answer";
        v.ac.final_answer = Answer::label(i == 0 ? 'B' : 'A');
        run.entries.push_back(v);
    }
    const auto acc = accuracy_of_run(run, ds);
    EXPECT_EQ(acc.total, 4u);
    EXPECT_EQ(acc.correct, 2u);
    EXPECT_EQ(acc.failures, 1u);
    EXPECT_DOUBLE_EQ(acc.accuracy, 0.5);
}
