#include "refer/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "refer/hash.hpp"
#include "refer/json_io.hpp"
#include "refer/text.hpp"

namespace refer {

std::string_view to_string(FailureClass c) {
    switch (c) {
        case FailureClass::Transient: return "transient";
        case FailureClass::RateLimited: return "rate_limited";
        case FailureClass::Server: return "server";
        case FailureClass::Client: return "client";
        case FailureClass::Auth: return "auth";
    }
    return "transient";
}

bool ImageAttachment::is_url() const {
    return location.rfind("http://", 0) == 0 || location.rfind("https://", 0) == 0;
}

ImageAttachment ImageAttachment::from_location(const std::string& location) {
    ImageAttachment img;
    img.location = location;
    const std::string ext = text::to_lower(std::filesystem::path(location).extension().string());
    if (ext == ".png") img.mime = "image/png";
    else if (ext == ".webp") img.mime = "image/webp";
    else if (ext == ".gif") img.mime = "image/gif";
    if (!img.is_url() && std::filesystem::exists(location)) img.digest = hash::sha256_file_hex(location);
    else img.digest = "url:" + hash::sha256_hex(location);
    return img;
}

// ---- cache ---------------------------------------------------------------

namespace {

nlohmann::ordered_json record_payload(const std::string& key, const std::string& request_digest,
                                      const CachedResponse& r, const std::string& timestamp) {
    nlohmann::ordered_json j;
    j["key"] = key;
    j["request_digest"] = request_digest;
    j["completions"] = r.completions;
    j["usage"] = {{"input_tokens", r.usage.input_tokens}, {"output_tokens", r.usage.output_tokens}};
    j["timestamp"] = timestamp;
    return j;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path dir, WarningSink warn)
    : file_(dir / "responses.jsonl"), warn_(std::move(warn)) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IOFailure, "cannot create cache dir " + dir.string() + ": " + ec.message());

    std::ifstream in(file_);
    if (!in) {
        std::ofstream out(file_);
        if (!out) throw Error(ErrorCode::IOFailure, "cannot create cache file " + file_.string());
        out << json_io::dump_line({{"format", "refer-cache"}, {"version", kCacheFormatVersion}}) << "\n";
        return;
    }

    std::string line;
    std::size_t lineno = 0;
    auto report = [this](const std::string& msg) {
        ++corrupt_;
        if (warn_) warn_("CacheCorruption: " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        nlohmann::ordered_json j;
        try {
            j = nlohmann::ordered_json::parse(line);
        } catch (const nlohmann::json::exception&) {
            report(file_.string() + ":" + std::to_string(lineno) + " is not valid JSON; ignored");
            continue;
        }
        if (lineno == 1 && j.contains("format")) {
            if (j.value("format", "") != "refer-cache" || j.value("version", 0) != kCacheFormatVersion)
                throw Error(ErrorCode::UnknownFormatVersion, "cache " + file_.string() + " has an unknown format version");
            continue;
        }
        try {
            const std::string checksum = j.at("checksum").get<std::string>();
            j.erase("checksum");
            if (hash::sha256_hex(json_io::dump_line(j)) != checksum) {
                report(file_.string() + ":" + std::to_string(lineno) + " checksum mismatch; treated as a miss");
                continue;
            }
            CachedResponse r;
            r.completions = j.at("completions").get<std::vector<std::string>>();
            r.usage.input_tokens = j.at("usage").at("input_tokens").get<std::int64_t>();
            r.usage.output_tokens = j.at("usage").at("output_tokens").get<std::int64_t>();
            index_[j.at("key").get<std::string>()] = std::move(r);
        } catch (const nlohmann::json::exception&) {
            report(file_.string() + ":" + std::to_string(lineno) + " has missing fields; ignored");
        }
    }
}

std::optional<CachedResponse> ResponseCache::lookup(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::store(const std::string& key, const std::string& request_digest, const CachedResponse& response) {
    auto j = record_payload(key, request_digest, response, utc_timestamp());
    const std::string checksum = hash::sha256_hex(json_io::dump_line(j));
    j["checksum"] = checksum;
    const std::string line = json_io::dump_line(j) + "\n";

    std::lock_guard lock(mu_);
    std::ofstream out(file_, std::ios::app);
    if (!out) throw Error(ErrorCode::IOFailure, "cannot append to cache " + file_.string());
    out << line;
    out.flush();
    index_[key] = response;
}

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mu_);
    return index_.size();
}

namespace {

nlohmann::json request_descriptor(const ChatRequest& request, const ModelHandle& handle, bool with_prompt) {
    nlohmann::json j{{"provider", handle.provider},
                     {"model_id", handle.model_id},
                     {"image_digest", request.image ? request.image->digest : ""},
                     {"n", request.n},
                     {"temperature", request.temperature},
                     {"top_p", request.top_p},
                     {"max_tokens", request.max_tokens ? nlohmann::json(*request.max_tokens) : nlohmann::json(nullptr)},
                     {"stop", request.stop},
                     {"resample", request.resample}};
    if (with_prompt) j["prompt"] = request.prompt;
    else j["prompt_sha256"] = hash::sha256_hex(request.prompt);
    return j;
}

}  // namespace

std::string cache_key(const ChatRequest& request, const ModelHandle& handle) {
    // nlohmann::json keeps keys sorted, which makes the dump canonical.
    return hash::sha256_hex(request_descriptor(request, handle, true).dump());
}

// ---- rate limiting ---------------------------------------------------------

RateLimiter::RateLimiter(double requests_per_minute, Clock& clock)
    : rate_per_us_(requests_per_minute / 60e6),
      capacity_(std::max(1.0, requests_per_minute)),
      tokens_(capacity_),
      last_(clock.now()),
      clock_(clock) {}

void RateLimiter::acquire() {
    while (true) {
        Duration wait{0};
        {
            std::lock_guard lock(mu_);
            const auto now = clock_.now();
            tokens_ = std::min(capacity_, tokens_ + static_cast<double>(micros_between(last_, now)) * rate_per_us_);
            last_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            wait = Duration(static_cast<std::int64_t>((1.0 - tokens_) / rate_per_us_) + 1);
        }
        clock_.sleep_for(wait);
    }
}

// ---- ledger ----------------------------------------------------------------

CostLedger::CostLedger(const CostLedger& other) : entries_(other.entries()) {}

CostLedger& CostLedger::operator=(const CostLedger& other) {
    if (this != &other) {
        auto copy = other.entries();
        std::lock_guard lock(mu_);
        entries_ = std::move(copy);
    }
    return *this;
}

void CostLedger::add(const std::string& method, const std::string& model, const LedgerEntry& delta) {
    std::lock_guard lock(mu_);
    auto& e = entries_[{method, model}];
    e.calls += delta.calls;
    e.input_tokens += delta.input_tokens;
    e.output_tokens += delta.output_tokens;
    e.monetary_cost += delta.monetary_cost;
    e.wall_time_us += delta.wall_time_us;
}

std::map<CostLedger::Key, LedgerEntry> CostLedger::entries() const {
    std::lock_guard lock(mu_);
    return entries_;
}

LedgerEntry CostLedger::total() const {
    LedgerEntry t;
    for (const auto& [key, e] : entries()) {
        t.calls += e.calls;
        t.input_tokens += e.input_tokens;
        t.output_tokens += e.output_tokens;
        t.monetary_cost += e.monetary_cost;
        t.wall_time_us += e.wall_time_us;
    }
    return t;
}

std::map<std::string, Rational> CostLedger::cost_by_method() const {
    std::map<std::string, Rational> out;
    for (const auto& [key, e] : entries()) out[key.first] += e.monetary_cost;
    return out;
}

Rational usage_cost(const Usage& usage, const Pricing& pricing) {
    return Rational(usage.input_tokens, 1000) * pricing.input_per_1k +
           Rational(usage.output_tokens, 1000) * pricing.output_per_1k;
}

void record_usage(CostLedger& ledger, const std::string& method, const ModelHandle& handle,
                  const ChatResponse& response) {
    LedgerEntry delta;
    delta.calls = 1;
    delta.input_tokens = response.usage.input_tokens;
    delta.output_tokens = response.usage.output_tokens;
    delta.monetary_cost = usage_cost(response.usage, handle.pricing);
    delta.wall_time_us = response.latency.count();
    ledger.add(method, handle.name, delta);
}

// ---- gateway ---------------------------------------------------------------

void validate_request(const ChatRequest& request, const ModelHandle& handle) {
    if (request.n < 1) throw Error(ErrorCode::InvalidRequest, "n must be >= 1");
    if (!(request.temperature >= 0.0)) throw Error(ErrorCode::InvalidRequest, "temperature must be >= 0");
    if (!(request.top_p > 0.0 && request.top_p <= 1.0)) throw Error(ErrorCode::InvalidRequest, "top_p must be in (0, 1]");
    if (request.max_tokens && *request.max_tokens < 1) throw Error(ErrorCode::InvalidRequest, "max_tokens must be positive");
    if (request.image && !handle.supports_images)
        throw Error(ErrorCode::UnsupportedImage, "model '" + handle.name + "' does not accept images");
}

Gateway::Gateway(Clock& clock, int max_in_flight) : clock_(clock), in_flight_(std::max(1, max_in_flight)) {}

void Gateway::register_backend(const std::string& handle_name, std::shared_ptr<Backend> backend) {
    backends_[handle_name] = std::move(backend);
}

void Gateway::set_rate_limit(const std::string& provider, double requests_per_minute) {
    if (requests_per_minute <= 0) limiters_.erase(provider);
    else limiters_[provider] = std::make_unique<RateLimiter>(requests_per_minute, clock_);
}

BackendReply Gateway::call_with_retry(Backend& backend, const ChatRequest& request, const ModelHandle& handle,
                                      const RetryPolicy& policy, int& attempts) {
    Duration backoff = policy.initial_backoff;
    std::string last_failure = "no attempt made";
    const int max_attempts = std::max(1, policy.max_attempts);
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        if (auto it = limiters_.find(handle.provider); it != limiters_.end()) it->second->acquire();
        ++attempts;
        ++attempts_;
        try {
            in_flight_.acquire();
            struct Release {
                std::counting_semaphore<>& s;
                ~Release() { s.release(); }
            } release{in_flight_};
            BackendReply reply = backend.complete(request, handle);
            if (static_cast<int>(reply.completions.size()) != request.n)
                throw BackendError(FailureClass::Server, "backend returned " + std::to_string(reply.completions.size()) +
                                                             " completions, expected " + std::to_string(request.n));
            return reply;
        } catch (const BackendError& e) {
            last_failure = e.what();
            if (!policy.retryable || !policy.retryable(e.failure_class())) break;
            if (attempt < max_attempts) {
                clock_.sleep_for(backoff);
                const auto next = static_cast<std::int64_t>(static_cast<double>(backoff.count()) * policy.multiplier);
                backoff = std::min(Duration(next), policy.max_backoff);
            }
        }
    }
    throw Error(ErrorCode::BackendExhausted,
                "model '" + handle.name + "' failed after " + std::to_string(attempts) + " attempt(s): " + last_failure);
}

ChatResponse Gateway::invoke(const ChatRequest& request, const ModelHandle& handle, const RetryPolicy& policy,
                             bool use_cache) {
    validate_request(request, handle);
    const auto started = clock_.now();

    std::string key;
    if (cache_ && use_cache) {
        key = cache_key(request, handle);
        if (auto hit = cache_->lookup(key); hit && static_cast<int>(hit->completions.size()) == request.n) {
            ++hits_;
            ChatResponse r;
            r.completions = std::move(hit->completions);
            r.usage = hit->usage;
            r.from_cache = true;
            r.latency = Duration(micros_between(started, clock_.now()));
            return r;
        }
        ++misses_;
    }

    auto it = backends_.find(handle.name);
    if (it == backends_.end()) throw Error(ErrorCode::InvalidConfig, "no backend registered for model '" + handle.name + "'");
    Backend& backend = *it->second;

    ChatResponse response;
    if (request.n > 1 && !handle.supports_n) {
        ChatRequest single = request;
        single.n = 1;
        for (int i = 0; i < request.n; ++i) {
            BackendReply part = call_with_retry(backend, single, handle, policy, response.attempts);
            response.completions.push_back(std::move(part.completions.front()));
            response.usage.input_tokens += part.usage.input_tokens;
            response.usage.output_tokens += part.usage.output_tokens;
        }
    } else {
        BackendReply reply = call_with_retry(backend, request, handle, policy, response.attempts);
        response.completions = std::move(reply.completions);
        response.usage = reply.usage;
    }
    response.latency = Duration(micros_between(started, clock_.now()));

    if (cache_ && use_cache)
        cache_->store(key, hash::sha256_hex(request_descriptor(request, handle, false).dump()),
                      CachedResponse{response.completions, response.usage});
    return response;
}

GatewayStats Gateway::stats() const { return GatewayStats{attempts_.load(), hits_.load(), misses_.load()}; }

}  // namespace refer
