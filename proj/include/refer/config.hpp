#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "refer/gateway.hpp"
#include "refer/http_backend.hpp"
#include "refer/mock_backend.hpp"
#include "refer/orchestrator.hpp"

namespace refer {

inline constexpr int kConfigFormatVersion = 1;

struct AutoPromptSettings {
    bool enabled = false;
    std::string model;  // handle name; the area chair when empty
    std::size_t examples = 5;
    nlohmann::json params = nlohmann::json::object();  // over the area chair defaults
};

/// The parsed config document. Run settings that depend on the dataset
/// (hyperparameter defaults, strategy default) are resolved in make_run_config.
struct AppConfig {
    nlohmann::json doc;
    std::map<std::string, ModelHandle> models;
    std::map<std::string, nlohmann::json> mock_scripts;  // handle name -> script list
    RetryPolicy retry;
    std::map<std::string, double> rate_limits;  // provider -> requests per minute

    std::vector<std::string> peers;
    std::string area_chair;
    Variant variant = Variant::Lite;
    std::optional<int> n;
    std::optional<CommunicationStrategy> strategy;
    std::optional<int> min_peers;
    std::vector<std::string> metrics;
    int concurrency = 8;
    std::string seed_tag;
    std::string method;
    nlohmann::json peer_params = nlohmann::json::object();
    nlohmann::json ac_params = nlohmann::json::object();

    std::string schema_dir;
    std::string cache_dir;
    AutoPromptSettings auto_prompt;
};

/// Reads and version-checks a config file. Throws Error{InvalidConfig},
/// Error{UnknownFormatVersion}, Error{IOFailure}.
nlohmann::json load_config_document(const std::filesystem::path& path);

/// Applies "a.b.c=value". The value is read as JSON when it parses, else as a
/// string. Missing intermediate objects are created. Throws Error{InvalidConfig}.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Throws Error{InvalidConfig} naming the offending key.
AppConfig parse_config(const nlohmann::json& doc);

/// Builds a scripted backend from its JSON description:
///   [{"match": "any" | {"contains": s} | {"contains_all": [..]} | {"regex": r},
///     "replies": ["text", {"fail": "transient"}, ...]}, ...]
std::shared_ptr<MockBackend> build_mock_backend(const nlohmann::json& scripts);

/// Registers one backend per model handle (mock or HTTP) plus rate limits.
void register_backends(Gateway& gateway, const AppConfig& cfg, const EnvLookup& env);

/// Peer and area-chair handles, defaults for the dataset kind, and the
/// schemas for the requested metrics. Throws Error{InvalidConfig}.
RunConfig make_run_config(const AppConfig& cfg, const Dataset& dataset, std::map<std::string, SchemaPair> schemas);

/// Output-relevant settings only: no paths, credentials or concurrency.
nlohmann::ordered_json config_snapshot(const AppConfig& cfg, const RunConfig& run);

Hyperparameters merge_hyperparameters(Hyperparameters base, const nlohmann::json& overrides);

}  // namespace refer
