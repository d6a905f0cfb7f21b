// In-process run setup over scripted backends.
#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "refer/gateway.hpp"
#include "refer/mock_backend.hpp"
#include "refer/orchestrator.hpp"
#include "support.hpp"

namespace refer::testing {

struct Harness {
    ManualClock clock;
    Gateway gateway{clock, 64};
    CostLedger ledger;
    std::map<std::string, std::shared_ptr<MockBackend>> backends;
    RunConfig cfg;

    MockBackend& add_peer(const std::string& name) {
        cfg.peers.push_back(mock_handle(name, false));
        return backend(name);
    }
    MockBackend& set_area_chair(const std::string& name, bool supports_n = true) {
        cfg.area_chair = mock_handle(name, supports_n);
        return backend(name);
    }
    MockBackend& backend(const std::string& name) {
        auto& b = backends[name];
        if (!b) {
            b = std::make_shared<MockBackend>();
            gateway.register_backend(name, b);
        }
        return *b;
    }
    RunContext context() { return RunContext{gateway, ledger}; }
    std::size_t total_calls() const {
        std::size_t n = 0;
        for (const auto& [name, b] : backends) n += b->calls();
        return n;
    }
};

/// A rating config over one metric with the given schemas and a fast retry policy.
inline void use_rating_metric(RunConfig& cfg, const std::string& metric, ScoreScale scale) {
    cfg.schemas[metric] = SchemaPair{rating_schema(metric, scale), rating_schema(metric, scale, true)};
    cfg.task_kind = TaskKind::Rating;
    cfg.retry.max_attempts = 2;
    cfg.retry.initial_backoff = Duration(1000);
}

/// `count` samples; sample i has summary text "summary-<i>".
inline Dataset doc_dataset(std::size_t count, const std::string& metric, ScoreScale scale) {
    Dataset ds;
    ds.name = "synthetic";
    ds.kind = DatasetKind::NlgRating;
    ds.metrics = {metric};
    ds.scale = scale;
    for (std::size_t i = 0; i < count; ++i) {
        Sample s = doc_sample("s" + std::to_string(i), "document-" + std::to_string(i), "summary-" + std::to_string(i) + ".");
        s.human_scores[metric] = scale.min + Rational(static_cast<std::int64_t>(i % 3));
        s.scale = scale;
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

inline std::string summary_marker(std::size_t i) { return "Summary: summary-" + std::to_string(i) + "."; }

}  // namespace refer::testing
