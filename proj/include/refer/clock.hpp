#pragma once

#include <atomic>
#include <chrono>
#include <thread>

namespace refer {

using Duration = std::chrono::microseconds;

/// Time source for latency capture, backoff and rate limiting; injectable so
/// tests can run retries and throttling without real sleeps.
class Clock {
public:
    using time_point = std::chrono::steady_clock::time_point;
    virtual ~Clock() = default;
    virtual time_point now() const = 0;
    virtual void sleep_for(Duration d) = 0;
};

class SystemClock final : public Clock {
public:
    time_point now() const override { return std::chrono::steady_clock::now(); }
    void sleep_for(Duration d) override { std::this_thread::sleep_for(d); }
};

/// Time only moves when someone sleeps or calls advance().
class ManualClock final : public Clock {
public:
    time_point now() const override { return time_point(Duration(ticks_.load())); }
    void sleep_for(Duration d) override {
        ticks_ += d.count();
        slept_ += d.count();
    }
    void advance(Duration d) { ticks_ += d.count(); }
    Duration total_slept() const { return Duration(slept_.load()); }

private:
    std::atomic<std::int64_t> ticks_{0};
    std::atomic<std::int64_t> slept_{0};
};

inline std::int64_t micros_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration_cast<Duration>(b - a).count();
}

}  // namespace refer
