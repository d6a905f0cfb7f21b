#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "refer/clock.hpp"
#include "refer/error.hpp"
#include "refer/rational.hpp"

namespace refer {

struct Pricing {
    Rational input_per_1k;
    Rational output_per_1k;
    friend bool operator==(const Pricing&, const Pricing&) = default;
};

/// A configured model endpoint. `name` is the handle's key in the config;
/// `provider` picks the backend implementation and credentials.
struct ModelHandle {
    std::string name;
    std::string provider;
    std::string model_id;
    Pricing pricing;
    bool supports_n = false;
    bool supports_images = false;
    std::string base_url;     // provider default when empty
    std::string api_key_env;  // provider default when empty
    std::optional<bool> image_urls;  // provider default when unset
};

struct ImageAttachment {
    std::string location;  // URL or local path
    std::string digest;    // SHA-256 of the image bytes
    std::string mime = "image/jpeg";

    bool is_url() const;
    /// Hashes a local file, or the URL text when the image was never fetched.
    static ImageAttachment from_location(const std::string& location);
};

struct ChatRequest {
    std::string prompt;
    std::optional<ImageAttachment> image;
    int n = 1;
    double temperature = 1.0;
    double top_p = 1.0;
    std::optional<int> max_tokens;  // nullopt = unlimited
    std::vector<std::string> stop;
    /// Distinguishes deliberate re-samples of the same prompt in the cache.
    int resample = 0;
};

struct Usage {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    friend bool operator==(const Usage&, const Usage&) = default;
};

struct ChatResponse {
    std::vector<std::string> completions;
    Usage usage;
    Duration latency{0};
    bool from_cache = false;
    int attempts = 0;
};

enum class FailureClass { Transient, RateLimited, Server, Client, Auth };
std::string_view to_string(FailureClass c);

/// A failed backend attempt. Whether it is retried depends on the policy.
class BackendError : public Error {
public:
    BackendError(FailureClass cls, const std::string& message)
        : Error(ErrorCode::BackendFailure, std::string(to_string(cls)) + ": " + message), cls_(cls) {}
    FailureClass failure_class() const noexcept { return cls_; }

private:
    FailureClass cls_;
};

struct RetryPolicy {
    int max_attempts = 5;
    Duration initial_backoff = std::chrono::seconds(1);
    double multiplier = 2.0;
    Duration max_backoff = std::chrono::seconds(30);
    std::function<bool(FailureClass)> retryable = [](FailureClass c) {
        return c == FailureClass::Transient || c == FailureClass::RateLimited || c == FailureClass::Server;
    };
};

struct BackendReply {
    std::vector<std::string> completions;
    Usage usage;
};

class Backend {
public:
    virtual ~Backend() = default;
    /// One network attempt. Throws BackendError on failure.
    virtual BackendReply complete(const ChatRequest& request, const ModelHandle& handle) = 0;
};

// ---- cache ---------------------------------------------------------------

struct CachedResponse {
    std::vector<std::string> completions;
    Usage usage;
};

/// Append-only JSON-lines response store. The first line declares the
/// format version; each following line is one record with a SHA-256
/// checksum over its payload. Records failing the check are skipped with a
/// warning. Later records for the same key win.
class ResponseCache {
public:
    using WarningSink = std::function<void(const std::string&)>;

    explicit ResponseCache(std::filesystem::path dir, WarningSink warn = {});

    std::optional<CachedResponse> lookup(const std::string& key) const;
    void store(const std::string& key, const std::string& request_digest, const CachedResponse& response);

    std::size_t size() const;
    std::size_t corrupt_records() const { return corrupt_; }
    const std::filesystem::path& file() const { return file_; }

private:
    std::filesystem::path file_;
    WarningSink warn_;
    mutable std::mutex mu_;
    std::map<std::string, CachedResponse> index_;
    std::size_t corrupt_ = 0;
};

inline constexpr int kCacheFormatVersion = 1;

/// Canonical cache key over provider, model, prompt, image digest, n,
/// temperature, top_p, max_tokens, stop and the resample index.
std::string cache_key(const ChatRequest& request, const ModelHandle& handle);

// ---- rate limiting ---------------------------------------------------------

/// Token bucket refilled at `requests_per_minute`, with a burst of the same size.
class RateLimiter {
public:
    RateLimiter(double requests_per_minute, Clock& clock);
    void acquire();

private:
    double rate_per_us_;
    double capacity_;
    double tokens_;
    Clock::time_point last_;
    Clock& clock_;
    std::mutex mu_;
};

// ---- ledger ----------------------------------------------------------------

struct LedgerEntry {
    std::int64_t calls = 0;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    Rational monetary_cost;
    std::int64_t wall_time_us = 0;
    friend bool operator==(const LedgerEntry&, const LedgerEntry&) = default;
};

/// Per-(method, model) usage totals. Safe to update from many threads.
class CostLedger {
public:
    using Key = std::pair<std::string, std::string>;  // (method, model handle name)

    CostLedger() = default;
    CostLedger(const CostLedger& other);
    CostLedger& operator=(const CostLedger& other);

    void add(const std::string& method, const std::string& model, const LedgerEntry& delta);
    std::map<Key, LedgerEntry> entries() const;
    LedgerEntry total() const;
    std::map<std::string, Rational> cost_by_method() const;

    friend bool operator==(const CostLedger& a, const CostLedger& b) { return a.entries() == b.entries(); }

private:
    mutable std::mutex mu_;
    std::map<Key, LedgerEntry> entries_;
};

/// tokens / 1000 * price, exactly.
Rational usage_cost(const Usage& usage, const Pricing& pricing);

void record_usage(CostLedger& ledger, const std::string& method, const ModelHandle& handle,
                  const ChatResponse& response);

// ---- gateway ---------------------------------------------------------------

struct GatewayStats {
    std::int64_t backend_attempts = 0;
    std::int64_t cache_hits = 0;
    std::int64_t cache_misses = 0;
};

/// Routes requests to per-handle backends with caching, retries, per-provider
/// rate limits and a global bound on in-flight backend calls.
class Gateway {
public:
    explicit Gateway(Clock& clock, int max_in_flight = 64);

    void register_backend(const std::string& handle_name, std::shared_ptr<Backend> backend);
    void set_rate_limit(const std::string& provider, double requests_per_minute);
    void set_cache(std::shared_ptr<ResponseCache> cache) { cache_ = std::move(cache); }

    /// Serves from the cache when possible; otherwise performs up to
    /// policy.max_attempts attempts per backend call. Handles without
    /// native n support get n sequential single-completion calls.
    ///
    /// Throws Error{InvalidRequest}, Error{UnsupportedImage},
    /// Error{BackendExhausted}; Error{UnscriptedPrompt} passes through.
    ChatResponse invoke(const ChatRequest& request, const ModelHandle& handle, const RetryPolicy& policy,
                        bool use_cache = true);

    GatewayStats stats() const;
    Clock& clock() { return clock_; }

private:
    BackendReply call_with_retry(Backend& backend, const ChatRequest& request, const ModelHandle& handle,
                                 const RetryPolicy& policy, int& attempts);

    Clock& clock_;
    std::counting_semaphore<> in_flight_;
    std::shared_ptr<ResponseCache> cache_;
    std::map<std::string, std::shared_ptr<Backend>> backends_;
    std::map<std::string, std::unique_ptr<RateLimiter>> limiters_;
    std::atomic<std::int64_t> attempts_{0};
    std::atomic<std::int64_t> hits_{0};
    std::atomic<std::int64_t> misses_{0};
};

void validate_request(const ChatRequest& request, const ModelHandle& handle);

}  // namespace refer
