#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "refer/gateway.hpp"
#include "refer/parser.hpp"
#include "refer/prompt.hpp"
#include "refer/types.hpp"

namespace refer {

enum class Variant { Turbo, Lite };
std::string_view to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view text);

inline constexpr int kTurboDefaultN = 20;

struct Hyperparameters {
    double temperature = 1.0;
    double top_p = 1.0;
    std::optional<int> max_tokens;
    friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

/// Sampling defaults per role and dataset kind: the area chair runs at
/// temperature 1, top_p 1 with 256 tokens for rating tasks and no token limit
/// for reasoning; peers get 128 tokens for text rating, 192 for multimodal
/// rating and 256 for reasoning.
Hyperparameters default_hyperparameters(Role role, DatasetKind kind);

struct RunConfig {
    std::vector<ModelHandle> peers;
    ModelHandle area_chair;
    Variant variant = Variant::Lite;
    int n = 1;
    CommunicationStrategy strategy = CommunicationStrategy::ScoreOnly;
    int min_peers = 1;
    std::map<std::string, SchemaPair> schemas;  // metric -> prompts
    TaskKind task_kind = TaskKind::Rating;
    std::optional<AnswerSpace> answer_space;    // reasoning only
    Hyperparameters peer_params;
    Hyperparameters ac_params;
    RetryPolicy retry;
    std::string method;  // ledger key; defaults to "refer-<variant>"
    std::string seed_tag;
    bool fail_fast = false;

    std::string method_name() const;
};

/// Throws Error{InvalidConfig} naming the first violated rule.
void validate_run_config(const RunConfig& cfg);

/// min_peers default: max(1, K - 1).
int default_min_peers(std::size_t peer_count);

struct StageTiming {
    std::int64_t peers_us = 0;
    std::int64_t area_chair_us = 0;
    std::int64_t total_us = 0;
    friend bool operator==(const StageTiming&, const StageTiming&) = default;
};

struct ACVerdict {
    std::vector<Outcome> responses;
    std::optional<Rational> final_score;  // rating
    std::optional<Answer> final_answer;   // reasoning
    std::string final_comment;
    bool degraded = false;
    friend bool operator==(const ACVerdict&, const ACVerdict&) = default;
};

struct DroppedPeer {
    std::string peer;
    std::string reason;
    friend bool operator==(const DroppedPeer&, const DroppedPeer&) = default;
};

struct SampleVerdict {
    std::string sample_id;
    std::string metric;
    std::vector<PeerReview> peer_reviews;
    std::vector<DroppedPeer> dropped_peers;
    ACVerdict ac;
    StageTiming timing;
    friend bool operator==(const SampleVerdict&, const SampleVerdict&) = default;
};

struct SampleFailure {
    std::string sample_id;
    std::string metric;
    ErrorCode code = ErrorCode::ACFailure;
    std::string message;
    StageTiming timing;
    friend bool operator==(const SampleFailure&, const SampleFailure&) = default;
};

using RunEntry = std::variant<SampleVerdict, SampleFailure>;
const std::string& entry_sample_id(const RunEntry& e);
const std::string& entry_metric(const RunEntry& e);

struct RunInfo {
    std::string method;
    Variant variant = Variant::Lite;
    int n = 1;
    CommunicationStrategy strategy = CommunicationStrategy::ScoreOnly;
    TaskKind task_kind = TaskKind::Rating;
    std::string dataset;
    std::vector<std::string> metrics;
    std::vector<std::string> peers;
    std::string area_chair;
    int min_peers = 1;
    std::string seed_tag;
    friend bool operator==(const RunInfo&, const RunInfo&) = default;
};

struct RunStats {
    std::int64_t backend_attempts = 0;
    std::int64_t cache_hits = 0;
    std::int64_t cache_misses = 0;
    friend bool operator==(const RunStats&, const RunStats&) = default;
};

/// Full transcript of one dataset run.
struct RunRecord {
    RunInfo info;
    std::vector<RunEntry> entries;
    CostLedger ledger;
    RunStats stats;
    std::int64_t wall_time_us = 0;
    nlohmann::ordered_json config_snapshot;  // filled in by callers that persist runs

    std::size_t failure_count() const;
    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// Shared services for a run; the ledger receives one entry per backend
/// response under the config's method name.
struct RunContext {
    Gateway& gateway;
    CostLedger& ledger;
};

/// Runs every configured peer once, then the area chair once with n
/// completions (turbo) or one (lite). Peers that fail are dropped while at
/// least min_peers remain. Completions that fail to parse get one fresh
/// re-sample before the failure is final.
///
/// Throws Error{InsufficientPeers}, Error{ACFailure}, Error{ParseFailure},
/// Error{InvalidConfig}.
SampleVerdict evaluate_sample(const Sample& sample, const std::string& metric, const RunConfig& cfg, RunContext& ctx);

/// One entry per (sample, metric), in dataset order then metric order,
/// whatever the completion order. Per-sample errors are recorded unless
/// cfg.fail_fast, in which case the first error is rethrown.
RunRecord run_dataset(const Dataset& dataset, const std::vector<std::string>& metrics, const RunConfig& cfg,
                      RunContext& ctx, int concurrency_limit);

/// run_dataset for reasoning datasets: answers instead of scores, majority
/// vote over the area chair's responses.
RunRecord run_reasoning(const Dataset& dataset, const RunConfig& cfg, RunContext& ctx, int concurrency_limit);

/// Exact mean of the scores.
Rational mean_score(const std::vector<Outcome>& responses);

/// Most frequent answer; ties go to the answer seen first.
Answer majority_answer(const std::vector<Outcome>& responses);

}  // namespace refer
