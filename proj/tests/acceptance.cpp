// Acceptance suite: prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero when any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "corpus.hpp"
#include "golden.hpp"
#include "harness.hpp"
#include "oracles.hpp"
#include "refer/dataset_io.hpp"
#include "refer/metrics.hpp"

using namespace refer;
using namespace refer::testing;

namespace {

struct Result {
    enum Kind { Pass, Fail, Skip } kind = Pass;
    std::string detail;
};

Result pass(std::string d) { return {Result::Pass, std::move(d)}; }
Result fail(std::string d) { return {Result::Fail, std::move(d)}; }
Result skip(std::string d) { return {Result::Skip, std::move(d)}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::fixed << v;
    return os.str();
}

// ---- 1 ------------------------------------------------------------------------

Result protocol_conformance() {
    const auto t0 = std::chrono::steady_clock::now();
    constexpr std::size_t kSamples = 20;
    constexpr std::size_t kPeers = 3;
    const ScoreScale scale = scale_1_to(5);
    const Dataset ds = doc_dataset(kSamples, "coherence", scale);

    for (Variant variant : {Variant::Lite, Variant::Turbo}) {
        Harness h;
        use_rating_metric(h.cfg, "coherence", scale);
        h.cfg.variant = variant;
        h.cfg.n = variant == Variant::Turbo ? 20 : 1;
        h.cfg.min_peers = static_cast<int>(kPeers);
        for (std::size_t p = 0; p < kPeers; ++p)
            h.add_peer("peer" + std::to_string(p)).script(any_prompt(), {review_text("looks fine", "3")});
        auto& chair = h.set_area_chair("chair");
        // Per sample: 20 scripted scores; the expected final score is their
        // plain sum over the number of completions requested.
        std::vector<Rational> expected(kSamples);
        for (std::size_t i = 0; i < kSamples; ++i) {
            std::vector<std::string> replies;
            std::int64_t sum = 0;
            const int n = h.cfg.n;
            for (int k = 0; k < 20; ++k) {
                const int score = 1 + static_cast<int>((i * 7 + static_cast<std::size_t>(k) * 3) % 5);
                replies.push_back(review_text("chair " + std::to_string(k), std::to_string(score)));
                if (k < n) sum += score;
            }
            expected[i] = Rational(sum, n);
            chair.script(contains(summary_marker(i)), replies);
        }
        auto ctx = h.context();
        const RunRecord run = run_dataset(ds, {"coherence"}, h.cfg, ctx, 8);
        const std::string tag = variant == Variant::Turbo ? "turbo" : "lite";
        const std::size_t calls = h.total_calls();
        if (calls != kSamples * (kPeers + 1))
            return fail(tag + ": " + std::to_string(calls) + " backend calls, expected " +
                        std::to_string(kSamples * (kPeers + 1)));
        for (int n : h.backends["chair"]->requested_n())
            if (n != h.cfg.n) return fail(tag + ": area chair call carried n=" + std::to_string(n));
        if (run.failure_count() != 0) return fail(tag + ": unexpected failed samples");
        for (std::size_t i = 0; i < kSamples; ++i) {
            const auto& v = std::get<SampleVerdict>(run.entries[i]);
            if (!v.ac.final_score || *v.ac.final_score != expected[i])
                return fail(tag + ": sample " + v.sample_id + " final score " +
                            (v.ac.final_score ? v.ac.final_score->to_string() : "none") + ", expected " +
                            expected[i].to_string());
        }
    }
    const double secs = seconds_since(t0);
    if (secs >= 5.0) return fail("took " + fmt(secs) + " s");
    return pass("lite and turbo: 80 calls each, AC n=20 under turbo, exact means; " + fmt(secs) + " s");
}

// ---- 2 ------------------------------------------------------------------------

Result oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937 rng(1234567);
    std::uniform_int_distribution<int> len(2, 8), val(1, 4);
    int checked = 0, degenerate = 0;
    double worst = 0;
    while (checked < 1000) {
        const int n = len(rng);
        std::vector<double> x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x[i] = val(rng);
            y[i] = val(rng);
        }
        const bool flat = std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end() ||
                          std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) == y.end();
        if (flat) {
            // both coefficients are undefined here; the library must say so
            bool raised = false;
            try {
                spearman(x, y);
            } catch (const Error& e) {
                raised = e.code() == ErrorCode::DegenerateInput;
            }
            if (!raised) return fail("constant input did not raise DegenerateInput");
            ++degenerate;
            continue;
        }
        worst = std::max(worst, std::fabs(spearman(x, y).value - oracle::spearman(x, y)));
        worst = std::max(worst, std::fabs(kendall_tau_b(x, y).value - oracle::kendall_tau_b(x, y)));
        ++checked;
    }
    if (worst > 1e-12) return fail("max deviation " + std::to_string(worst));
    const std::vector<double> x{1, 2, 2, 3}, y{1, 2, 3, 4};
    const double tau = kendall_tau_b(x, y).value;
    if (std::fabs(tau - 5.0 / std::sqrt(30.0)) > 1e-12) return fail("tau_b example gave " + std::to_string(tau));
    const double secs = seconds_since(t0);
    if (secs >= 10.0) return fail("took " + fmt(secs) + " s");
    std::ostringstream os;
    os << "1000 pairs, max deviation " << worst << " (" << degenerate << " constant draws rejected); tau_b example exact; "
       << fmt(secs) << " s";
    return pass(os.str());
}

// ---- 3 ------------------------------------------------------------------------

Result parser_corpus() {
    const auto cases = load_parser_corpus();
    if (cases.size() < 30) return fail("only " + std::to_string(cases.size()) + " corpus cases");
    std::size_t agree = 0;
    std::string first_miss;
    for (const auto& c : cases) {
        const std::string got = run_parser_case(c);
        if (got == c.expected) ++agree;
        else if (first_miss.empty()) first_miss = c.id + ": got " + got + ", expected " + c.expected;
    }
    if (agree != cases.size())
        return fail(std::to_string(agree) + "/" + std::to_string(cases.size()) + " agree; " + first_miss);
    return pass(std::to_string(agree) + "/" + std::to_string(cases.size()) + " cases agree");
}

// ---- 4 ------------------------------------------------------------------------

Result determinism() {
    TempDir dir;
    const auto first = run_cli(evaluate_args(dir / "first", dir / "cache"));
    if (first.code != 0) return fail("first run exited " + std::to_string(first.code) + ": " + first.err);
    const auto second = run_cli(evaluate_args(dir / "second", dir / "cache"));
    if (second.code != 0) return fail("second run exited " + std::to_string(second.code) + ": " + second.err);
    if (masked_verdicts(dir / "first") != masked_verdicts(dir / "second")) return fail("verdicts differ");
    if (masked_summary(dir / "first") != masked_summary(dir / "second")) return fail("summaries differ");
    const auto stats = nlohmann::json::parse(slurp(dir / "second" / "summary.json"))["gateway_stats"];
    if (stats["backend_attempts"] != 0)
        return fail("second run made " + stats["backend_attempts"].dump() + " backend calls");
    return pass("RunRecords byte-identical with timings masked; second run: 0 backend calls, " +
                stats["cache_hits"].dump() + " cache hits");
}

// ---- 5 ------------------------------------------------------------------------

Result strategy_isolation() {
    constexpr std::size_t kSamples = 10;
    const ScoreScale scale{Rational(0), Rational(100), Granularity::Integer};
    const std::vector<std::string> peers = {"alpha", "beta", "gamma"};
    // Two-digit numerals that occur nowhere in the prompt text itself.
    auto sentinel_score = [](std::size_t sample, std::size_t peer) { return 37 + 11 * static_cast<int>(peer) + static_cast<int>(sample) % 2 * 3; };
    auto sentinel_text = [&](std::size_t sample, std::size_t peer) {
        return "SENTINEL-" + peers[peer] + "-" + std::string(1, static_cast<char>('a' + sample));
    };

    auto run_with = [&](CommunicationStrategy strategy, std::vector<std::string>& ac_prompts) -> std::string {
        Harness h;
        use_rating_metric(h.cfg, "coherence", scale);
        h.cfg.strategy = strategy;
        h.cfg.min_peers = static_cast<int>(peers.size());
        for (std::size_t p = 0; p < peers.size(); ++p) {
            auto& b = h.add_peer(peers[p]);
            for (std::size_t i = 0; i < kSamples; ++i)
                b.script(contains(summary_marker(i)),
                         {review_text("observed " + sentinel_text(i, p), std::to_string(sentinel_score(i, p)))});
        }
        h.set_area_chair("chair").script(any_prompt(), {review_text("combined", "50")});
        auto ctx = h.context();
        const auto run = run_dataset(doc_dataset(kSamples, "coherence", scale), {"coherence"}, h.cfg, ctx, 4);
        if (run.failure_count() != 0) return "run had failures";
        ac_prompts = h.backends["chair"]->prompts();
        if (ac_prompts.size() != kSamples) return "expected one area chair prompt per sample";
        return {};
    };

    std::vector<std::string> score_only, comment_only;
    if (auto e = run_with(CommunicationStrategy::ScoreOnly, score_only); !e.empty()) return fail("score_only: " + e);
    if (auto e = run_with(CommunicationStrategy::CommentOnly, comment_only); !e.empty()) return fail("comment_only: " + e);

    std::size_t checks = 0;
    for (const auto& prompt : score_only) {
        if (prompt.find("SENTINEL") != std::string::npos) return fail("score_only prompt leaks a peer analysis");
        ++checks;
    }
    for (const auto& prompt : comment_only) {
        for (std::size_t i = 0; i < kSamples; ++i)
            for (std::size_t p = 0; p < peers.size(); ++p) {
                if (prompt.find(std::to_string(sentinel_score(i, p))) != std::string::npos)
                    return fail("comment_only prompt leaks peer score " + std::to_string(sentinel_score(i, p)));
                ++checks;
            }
    }
    // The sentinels must reach the area chair through the channel the strategy allows.
    for (std::size_t i = 0; i < kSamples; ++i) {
        const auto find_prompt = [&](const std::vector<std::string>& prompts) -> const std::string* {
            for (const auto& p : prompts)
                if (p.find(summary_marker(i)) != std::string::npos) return &p;
            return nullptr;
        };
        const std::string* s = find_prompt(score_only);
        const std::string* c = find_prompt(comment_only);
        if (!s || !c) return fail("missing area chair prompt for sample " + std::to_string(i));
        for (std::size_t p = 0; p < peers.size(); ++p) {
            if (s->find("Rating: " + std::to_string(sentinel_score(i, p))) == std::string::npos)
                return fail("score_only prompt lacks a peer score");
            if (c->find(sentinel_text(i, p)) == std::string::npos) return fail("comment_only prompt lacks a peer analysis");
        }
    }
    return pass("10 samples x 2 strategies, " + std::to_string(checks) + " leak checks clean; allowed channels present");
}

// ---- 6 ------------------------------------------------------------------------

Result error_partition_soundness() {
    // Distance bands from the truth on a 1-5 scale (range 4):
    //   A = 0.25, B = 1 (exactly on the 0.25 threshold), C = 1.5, D = 3.
    // Correct bands: fraction 0.1 -> {A}; 0.25 -> {A, B}; 0.5 -> {A, B, C}.
    const std::map<char, Rational> distance = {
        {'A', Rational(1, 4)}, {'B', Rational(1)}, {'C', Rational(3, 2)}, {'D', Rational(3)}};
    // (best peer band, area chair band) -> number of samples
    const std::vector<std::tuple<char, char, int>> groups = {
        {'A', 'A', 10}, {'A', 'B', 8}, {'A', 'C', 6}, {'A', 'D', 5}, {'B', 'A', 9}, {'B', 'B', 7}, {'B', 'C', 6},
        {'B', 'D', 5},  {'C', 'A', 8}, {'C', 'B', 6}, {'C', 'C', 7}, {'C', 'D', 5}, {'D', 'A', 6}, {'D', 'B', 4},
        {'D', 'C', 4},  {'D', 'D', 4}};
    // Hand-counted cells: {peer right & AC right, peer right & AC wrong,
    // peers wrong & AC right, peers wrong & AC wrong}.
    const std::vector<std::pair<Rational, std::array<std::int64_t, 4>>> expected = {
        {Rational(1, 10), {10, 19, 23, 48}},
        {Rational(1, 4), {34, 22, 24, 20}},
        {Rational(1, 2), {67, 15, 14, 4}},
    };

    const ScoreScale scale = scale_1_to(5);
    std::vector<std::vector<Rational>> peer_scores;
    std::vector<Rational> ac, truth;
    std::size_t index = 0;
    for (const auto& [p, q, count] : groups) {
        for (int k = 0; k < count; ++k, ++index) {
            // alternate truths at both ends of the scale so distances point both ways
            const bool low = index % 2 == 0;
            const Rational t = low ? Rational(1) : Rational(5);
            auto at = [&](char band) { return low ? t + distance.at(band) : t - distance.at(band); };
            truth.push_back(t);
            ac.push_back(at(q));
            std::vector<Rational> ps = {at('D'), at(p), at('D')};
            std::rotate(ps.begin(), ps.begin() + static_cast<long>(index % 3), ps.end());
            peer_scores.push_back(ps);
        }
    }
    if (truth.size() != 100) return fail("synthetic set has " + std::to_string(truth.size()) + " samples");

    std::int64_t prev_ac = -1, prev_peer = -1;
    for (const auto& [fraction, cells] : expected) {
        const auto c = error_partition(peer_scores, ac, truth, scale, fraction);
        const std::array<std::int64_t, 4> got = {c.peer_right_ac_right, c.peer_right_ac_wrong, c.peers_wrong_ac_right,
                                                 c.peers_wrong_ac_wrong};
        if (got != cells) {
            std::ostringstream os;
            os << "fraction " << fraction.to_string() << ": got " << got[0] << "/" << got[1] << "/" << got[2] << "/"
               << got[3] << ", expected " << cells[0] << "/" << cells[1] << "/" << cells[2] << "/" << cells[3];
            return fail(os.str());
        }
        if (c.total() != 100) return fail("cells sum to " + std::to_string(c.total()));
        const std::int64_t ac_right = got[0] + got[2], peer_right = got[0] + got[1];
        if (ac_right < prev_ac || peer_right < prev_peer) return fail("not monotone at " + fraction.to_string());
        prev_ac = ac_right;
        prev_peer = peer_right;
    }
    return pass("cells match the hand oracle at 0.1, 0.25, 0.5; each sums to 100; monotone");
}

// ---- 7 ------------------------------------------------------------------------

Result golden_fixture() {
    TempDir dir;
    if (auto e = produce_golden_outputs(dir.path()); !e.empty()) return fail(e);
    const auto bad = golden_mismatches(dir.path());
    if (!bad.empty()) {
        std::string list;
        for (const auto& f : bad) list += (list.empty() ? "" : ", ") + f;
        return fail("differs from golden: " + list);
    }
    return pass("RunRecord and correlation report byte-identical to the checked-in copies");
}

// ---- 8 ------------------------------------------------------------------------

Result live_smoke() {
    const char* config = std::getenv("REFER_LIVE_CONFIG");
    const char* dataset = std::getenv("REFER_LIVE_DATASET");
    const char* schemas = std::getenv("REFER_LIVE_SCHEMA_DIR");
    if (!config || !dataset || !schemas)
        return skip("set REFER_LIVE_CONFIG, REFER_LIVE_DATASET and REFER_LIVE_SCHEMA_DIR to run against real providers");

    TempDir dir;
    SystemClock clock;
    std::ostringstream out, err;
    cli::Env env{clock, out, err};
    const int code = cli::run({"evaluate", "--config", config, "--schema-dir", schemas, "--dataset", dataset, "--out",
                               (dir / "run").string(), "--variant", "lite", "--n", "1"},
                              env);
    if (code != 0) return fail("evaluate exited " + std::to_string(code) + ": " + err.str());
    if (cli::run({"correlate", "--run", (dir / "run").string(), "--dataset", dataset}, env) != 0)
        return fail("correlate failed: " + err.str());

    const auto run = load_run(dir / "run");
    const auto report = nlohmann::json::parse(slurp(dir / "run" / "correlation.json"));
    if (report["format"] != "refer-correlation") return fail("malformed correlation report");
    for (const auto& row : report["rows"])
        if (!row["spearman"].is_number() || !std::isfinite(row["spearman"].get<double>()))
            return fail("metric " + row["metric"].get<std::string>() + " has no finite rho");

    // ledger consistency: per-method cost equals the sum of its entries, and
    // every verdict accounts for at least one call per peer plus the chair
    Rational sum;
    std::int64_t calls = 0;
    for (const auto& [key, e] : run.ledger.entries()) {
        sum += e.monetary_cost;
        calls += e.calls;
    }
    Rational by_method;
    for (const auto& [m, c] : run.ledger.cost_by_method()) by_method += c;
    if (sum != by_method) return fail("ledger totals disagree");
    const auto verdicts = static_cast<std::int64_t>(run.entries.size() - run.failure_count());
    if (calls < verdicts * static_cast<std::int64_t>(run.info.peers.size() + 1))
        return fail("ledger records fewer calls than the verdicts need");
    return pass(std::to_string(verdicts) + " verdicts, finite rho per metric, ledger consistent");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
        {"1 protocol conformance", protocol_conformance},
        {"2 oracle equivalence", oracle_equivalence},
        {"3 parser robustness corpus", parser_corpus},
        {"4 determinism with warmed cache", determinism},
        {"5 strategy isolation", strategy_isolation},
        {"6 error-partition soundness", error_partition_soundness},
        {"7 end-to-end golden fixture", golden_fixture},
        {"8 live smoke (optional)", live_smoke},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Result o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        const char* tag = o.kind == Result::Pass ? "PASS" : o.kind == Result::Fail ? "FAIL" : "SKIP";
        if (o.kind == Result::Fail) ++failures;
        std::cout << tag << "  [" << name << "] " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
