#include "refer/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <future>
#include <set>
#include <thread>

namespace refer {

std::string_view to_string(Variant v) { return v == Variant::Turbo ? "turbo" : "lite"; }

std::optional<Variant> parse_variant(std::string_view text) {
    if (text == "turbo") return Variant::Turbo;
    if (text == "lite") return Variant::Lite;
    return std::nullopt;
}

Hyperparameters default_hyperparameters(Role role, DatasetKind kind) {
    Hyperparameters h;
    if (role == Role::AreaChair) {
        if (kind != DatasetKind::Reasoning) h.max_tokens = 256;
        return h;
    }
    switch (kind) {
        case DatasetKind::NlgRating: h.max_tokens = 128; break;
        case DatasetKind::MultimodalRating: h.max_tokens = 192; break;
        case DatasetKind::Reasoning: h.max_tokens = 256; break;
    }
    return h;
}

std::string RunConfig::method_name() const {
    return method.empty() ? "refer-" + std::string(to_string(variant)) : method;
}

int default_min_peers(std::size_t peer_count) { return std::max(1, static_cast<int>(peer_count) - 1); }

void validate_run_config(const RunConfig& cfg) {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
    if (cfg.peers.empty()) fail("at least one peer is required");
    if (cfg.n < 1) fail("n must be >= 1");
    if (cfg.variant == Variant::Lite && cfg.n != 1) fail("the lite variant requires n = 1 (got " + std::to_string(cfg.n) + ")");
    if (cfg.min_peers < 1 || cfg.min_peers > static_cast<int>(cfg.peers.size()))
        fail("min_peers must be in [1, " + std::to_string(cfg.peers.size()) + "]");
    if (cfg.task_kind == TaskKind::Reasoning && !cfg.answer_space) fail("reasoning runs need an answer space");
    std::set<std::string> names;
    for (const auto& p : cfg.peers)
        if (!names.insert(p.name).second) fail("peer '" + p.name + "' is listed twice");
    for (const auto& [metric, pair] : cfg.schemas) {
        for (const auto* schema : {&pair.peer, &pair.area_chair}) {
            if (schema->task_kind != cfg.task_kind)
                fail("schema for metric '" + metric + "' has task_kind " + std::string(to_string(schema->task_kind)));
            auto issues = validate_schema(*schema);
            if (!issues.empty())
                fail("schema for metric '" + metric + "': " + issues.front().field + " " + issues.front().rule);
        }
    }
}

const std::string& entry_sample_id(const RunEntry& e) {
    return std::visit([](const auto& v) -> const std::string& { return v.sample_id; }, e);
}

const std::string& entry_metric(const RunEntry& e) {
    return std::visit([](const auto& v) -> const std::string& { return v.metric; }, e);
}

std::size_t RunRecord::failure_count() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const RunEntry& e) { return std::holds_alternative<SampleFailure>(e); }));
}

Rational mean_score(const std::vector<Outcome>& responses) {
    if (responses.empty()) throw Error(ErrorCode::ACFailure, "no area chair responses to aggregate");
    Rational sum;
    for (const auto& r : responses) sum += std::get<ReviewOutcome>(r).score;
    return sum / Rational(static_cast<std::int64_t>(responses.size()));
}

Answer majority_answer(const std::vector<Outcome>& responses) {
    if (responses.empty()) throw Error(ErrorCode::ACFailure, "no area chair responses to aggregate");
    std::vector<std::pair<Answer, int>> tally;
    for (const auto& r : responses) {
        const Answer& a = std::get<AnswerOutcome>(r).answer;
        auto it = std::find_if(tally.begin(), tally.end(), [&](const auto& t) { return t.first == a; });
        if (it == tally.end()) tally.emplace_back(a, 1);
        else ++it->second;
    }
    // max_element keeps the first of equal maxima, i.e. the first-seen answer.
    return std::max_element(tally.begin(), tally.end(), [](const auto& a, const auto& b) { return a.second < b.second; })
        ->first;
}

namespace {

ChatRequest make_request(std::string prompt, const std::optional<ImageAttachment>& image, int n,
                         const Hyperparameters& h) {
    ChatRequest r;
    r.prompt = std::move(prompt);
    r.image = image;
    r.n = n;
    r.temperature = h.temperature;
    r.top_p = h.top_p;
    r.max_tokens = h.max_tokens;
    return r;
}

Outcome parse_completion(const std::string& text, const PromptSchema& schema, const RunConfig& cfg) {
    if (cfg.task_kind == TaskKind::Rating) return parse_rating(text, *schema.scale, schema.metric_name);
    return parse_answer(text, *cfg.answer_space);
}

bool is_parse_error(ErrorCode c) {
    return c == ErrorCode::NoRatingFound || c == ErrorCode::OutOfScale || c == ErrorCode::NoAnswerFound ||
           c == ErrorCode::LabelOutsideSpace;
}

// Invokes, parses every completion, and re-samples the unparseable ones once.
std::vector<Outcome> invoke_and_parse(const ChatRequest& request, const ModelHandle& handle, const PromptSchema& schema,
                                      const RunConfig& cfg, RunContext& ctx) {
    const std::string method = cfg.method_name();
    ChatResponse first = ctx.gateway.invoke(request, handle, cfg.retry);
    record_usage(ctx.ledger, method, handle, first);

    std::vector<std::optional<Outcome>> parsed(first.completions.size());
    std::vector<std::size_t> failed;
    for (std::size_t i = 0; i < first.completions.size(); ++i) {
        try {
            parsed[i] = parse_completion(first.completions[i], schema, cfg);
        } catch (const Error& e) {
            if (!is_parse_error(e.code())) throw;
            failed.push_back(i);
        }
    }
    if (!failed.empty()) {
        ChatRequest again = request;
        again.n = static_cast<int>(failed.size());
        again.resample = request.resample + 1;
        ChatResponse second = ctx.gateway.invoke(again, handle, cfg.retry);
        record_usage(ctx.ledger, method, handle, second);
        for (std::size_t k = 0; k < failed.size(); ++k) {
            try {
                parsed[failed[k]] = parse_completion(second.completions[k], schema, cfg);
            } catch (const Error& e) {
                if (!is_parse_error(e.code())) throw;
                throw Error(ErrorCode::ParseFailure, "model '" + handle.name + "' twice produced an unparseable " +
                                                         "completion (" + e.what() + ")");
            }
        }
    }
    std::vector<Outcome> out;
    out.reserve(parsed.size());
    for (auto& p : parsed) out.push_back(std::move(*p));
    return out;
}

struct PeerResult {
    std::optional<PeerReview> review;
    std::optional<DroppedPeer> dropped;
};

}  // namespace

SampleVerdict evaluate_sample(const Sample& sample, const std::string& metric, const RunConfig& cfg, RunContext& ctx) {
    auto schema_it = cfg.schemas.find(metric);
    if (schema_it == cfg.schemas.end()) throw Error(ErrorCode::InvalidConfig, "no schema for metric '" + metric + "'");
    const SchemaPair& schemas = schema_it->second;
    Clock& clock = ctx.gateway.clock();
    const auto started = clock.now();

    std::optional<ImageAttachment> image;
    if (sample.image) image = ImageAttachment::from_location(*sample.image);

    // Phase 1: every peer sees the same prompt and nothing from other peers.
    const std::string peer_prompt = render_prompt(schemas.peer, sample, Role::Peer);
    std::vector<std::future<PeerResult>> pending;
    pending.reserve(cfg.peers.size());
    for (const auto& peer : cfg.peers) {
        pending.push_back(std::async(std::launch::async, [&, peer_ptr = &peer]() -> PeerResult {
            const ChatRequest request = make_request(peer_prompt, image, 1, cfg.peer_params);
            try {
                auto outcomes = invoke_and_parse(request, *peer_ptr, schemas.peer, cfg, ctx);
                return PeerResult{PeerReview{peer_ptr->name, std::move(outcomes.front())}, std::nullopt};
            } catch (const Error& e) {
                if (e.code() == ErrorCode::BackendExhausted || e.code() == ErrorCode::ParseFailure)
                    return PeerResult{std::nullopt, DroppedPeer{peer_ptr->name, e.what()}};
                throw;
            }
        }));
    }
    SampleVerdict verdict;
    verdict.sample_id = sample.id;
    verdict.metric = metric;
    std::exception_ptr first_error;
    for (auto& f : pending) {
        try {
            PeerResult r = f.get();
            if (r.review) verdict.peer_reviews.push_back(std::move(*r.review));
            if (r.dropped) verdict.dropped_peers.push_back(std::move(*r.dropped));
        } catch (...) {
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    const auto peers_done = clock.now();
    verdict.timing.peers_us = micros_between(started, peers_done);

    if (static_cast<int>(verdict.peer_reviews.size()) < cfg.min_peers) {
        std::string msg = std::to_string(verdict.peer_reviews.size()) + " usable peer review(s), need " +
                          std::to_string(cfg.min_peers);
        if (!verdict.dropped_peers.empty()) msg += "; first drop: " + verdict.dropped_peers.front().reason;
        throw Error(ErrorCode::InsufficientPeers, msg);
    }

    // Phase 2: the area chair sees the surviving reviews under the strategy.
    const int n = cfg.variant == Variant::Turbo ? cfg.n : 1;
    const std::string ac_prompt =
        render_prompt(schemas.area_chair, sample, Role::AreaChair, verdict.peer_reviews, cfg.strategy);
    const ChatRequest ac_request = make_request(ac_prompt, image, n, cfg.ac_params);
    try {
        verdict.ac.responses = invoke_and_parse(ac_request, cfg.area_chair, schemas.area_chair, cfg, ctx);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::BackendExhausted) throw Error(ErrorCode::ACFailure, e.what());
        throw;
    }
    if (cfg.task_kind == TaskKind::Rating) verdict.ac.final_score = mean_score(verdict.ac.responses);
    else verdict.ac.final_answer = majority_answer(verdict.ac.responses);
    verdict.ac.final_comment = analysis_of(verdict.ac.responses.front());
    verdict.ac.degraded = verdict.peer_reviews.size() < cfg.peers.size();

    const auto done = clock.now();
    verdict.timing.area_chair_us = micros_between(peers_done, done);
    verdict.timing.total_us = micros_between(started, done);
    return verdict;
}

RunRecord run_dataset(const Dataset& dataset, const std::vector<std::string>& metrics, const RunConfig& cfg,
                      RunContext& ctx, int concurrency_limit) {
    if (metrics.empty()) throw Error(ErrorCode::InvalidConfig, "metric list is empty");
    if (dataset.samples.empty()) throw Error(ErrorCode::InvalidConfig, "dataset '" + dataset.name + "' is empty");
    if (concurrency_limit < 1) throw Error(ErrorCode::InvalidConfig, "concurrency limit must be >= 1");
    if (cfg.task_kind != dataset.task_kind())
        throw Error(ErrorCode::InvalidConfig, "run task kind does not match dataset '" + dataset.name + "'");
    validate_run_config(cfg);
    for (const auto& m : metrics)
        if (!cfg.schemas.contains(m)) throw Error(ErrorCode::InvalidConfig, "no schema for metric '" + m + "'");

    RunRecord record;
    record.info = RunInfo{cfg.method_name(), cfg.variant, cfg.variant == Variant::Turbo ? cfg.n : 1,
                          cfg.strategy, cfg.task_kind, dataset.name, metrics, {}, cfg.area_chair.name,
                          cfg.min_peers, cfg.seed_tag};
    for (const auto& p : cfg.peers) record.info.peers.push_back(p.name);

    const GatewayStats before = ctx.gateway.stats();
    Clock& clock = ctx.gateway.clock();
    const auto started = clock.now();

    const std::size_t units = dataset.samples.size() * metrics.size();
    std::vector<std::optional<RunEntry>> results(units);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex error_mu;
    std::exception_ptr fatal;

    auto worker = [&] {
        while (!stop.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= units) return;
            const Sample& sample = dataset.samples[i / metrics.size()];
            const std::string& metric = metrics[i % metrics.size()];
            const auto unit_started = clock.now();
            try {
                results[i] = evaluate_sample(sample, metric, cfg, ctx);
            } catch (const Error& e) {
                SampleFailure failure{sample.id, metric, e.code(), e.what(), {}};
                failure.timing.total_us = micros_between(unit_started, clock.now());
                results[i] = std::move(failure);
                if (cfg.fail_fast) {
                    std::lock_guard lock(error_mu);
                    if (!fatal) fatal = std::current_exception();
                    stop = true;
                }
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!fatal) fatal = std::current_exception();
                stop = true;
            }
        }
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(concurrency_limit), units);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (fatal) std::rethrow_exception(fatal);

    record.entries.reserve(units);
    for (auto& r : results) record.entries.push_back(std::move(*r));
    record.ledger = ctx.ledger;
    const GatewayStats after = ctx.gateway.stats();
    record.stats = RunStats{after.backend_attempts - before.backend_attempts, after.cache_hits - before.cache_hits,
                            after.cache_misses - before.cache_misses};
    record.wall_time_us = micros_between(started, clock.now());
    return record;
}

RunRecord run_reasoning(const Dataset& dataset, const RunConfig& cfg, RunContext& ctx, int concurrency_limit) {
    if (dataset.task_kind() != TaskKind::Reasoning || cfg.task_kind != TaskKind::Reasoning)
        throw Error(ErrorCode::InvalidConfig, "run_reasoning needs a reasoning dataset and config");
    for (const auto& [metric, pair] : cfg.schemas)
        if (!pair.peer.guidelines.empty() || !pair.area_chair.guidelines.empty())
            throw Error(ErrorCode::InvalidConfig, "reasoning schema for '" + metric + "' must not carry guidelines");
    RunConfig effective = cfg;
    if (!effective.answer_space) effective.answer_space = dataset.answer_space;
    return run_dataset(dataset, dataset.metrics, effective, ctx, concurrency_limit);
}

}  // namespace refer
