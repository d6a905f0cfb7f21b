#include "refer/config.hpp"

#include <fstream>
#include <regex>
#include <set>

#include "refer/error.hpp"
#include "refer/json_io.hpp"
#include "refer/text.hpp"

namespace refer {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
    throw Error(ErrorCode::InvalidConfig, key + ": " + what);
}

const json* member(const json& obj, const char* key) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
}

std::string as_string(const json& j, const std::string& key) {
    if (!j.is_string()) bad(key, "expected a string");
    return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& key) {
    if (!j.is_boolean()) bad(key, "expected true or false");
    return j.get<bool>();
}

std::int64_t as_int(const json& j, const std::string& key) {
    if (!j.is_number_integer()) bad(key, "expected an integer");
    return j.get<std::int64_t>();
}

double as_number(const json& j, const std::string& key) {
    if (!j.is_number()) bad(key, "expected a number");
    return j.get<double>();
}

Rational as_rational(const json& j, const std::string& key) {
    try {
        return json_io::rational(j, key);
    } catch (const Error&) {
        bad(key, "expected a decimal number");
    }
}

std::vector<std::string> as_names(const json& j, const std::string& key) {
    std::vector<std::string> out;
    if (j.is_string()) {
        // "a,b,c" as produced by command-line overrides
        for (const auto& part : text::split(j.get<std::string>(), ','))
            if (auto t = text::trim(part); !t.empty()) out.emplace_back(t);
        return out;
    }
    if (!j.is_array()) bad(key, "expected a list of names");
    for (const auto& e : j) out.push_back(as_string(e, key));
    return out;
}

Duration millis(const json& j, const std::string& key) {
    const std::int64_t v = as_int(j, key);
    if (v < 0) bad(key, "must not be negative");
    return std::chrono::milliseconds(v);
}

FailureClass failure_class(const std::string& name) {
    if (name == "transient") return FailureClass::Transient;
    if (name == "rate_limited") return FailureClass::RateLimited;
    if (name == "server") return FailureClass::Server;
    if (name == "client") return FailureClass::Client;
    if (name == "auth") return FailureClass::Auth;
    bad("mock reply", "unknown failure class \"" + name + "\"");
}

PromptMatcher matcher_from_json(const json& j) {
    if (j.is_string() && j == "any") return any_prompt();
    if (j.is_object()) {
        if (const json* c = member(j, "contains")) return contains(as_string(*c, "match.contains"));
        if (const json* c = member(j, "contains_all")) return contains_all(as_names(*c, "match.contains_all"));
        if (const json* r = member(j, "regex")) {
            try {
                return matches_regex(as_string(*r, "match.regex"));
            } catch (const std::regex_error& e) {
                bad("match.regex", e.what());
            }
        }
    }
    bad("mock match", "expected \"any\" or an object with contains, contains_all or regex");
}

ModelHandle parse_handle(const std::string& name, const json& j) {
    const std::string key = "models." + name;
    if (!j.is_object()) bad(key, "expected an object");
    ModelHandle h;
    h.name = name;
    const json* provider = member(j, "provider");
    if (!provider) bad(key + ".provider", "is required");
    h.provider = as_string(*provider, key + ".provider");
    h.model_id = name;
    if (const json* m = member(j, "model_id")) h.model_id = as_string(*m, key + ".model_id");
    if (const json* p = member(j, "pricing")) {
        if (const json* v = member(*p, "input_per_1k")) h.pricing.input_per_1k = as_rational(*v, key + ".pricing.input_per_1k");
        if (const json* v = member(*p, "output_per_1k"))
            h.pricing.output_per_1k = as_rational(*v, key + ".pricing.output_per_1k");
        if (h.pricing.input_per_1k < Rational(0) || h.pricing.output_per_1k < Rational(0))
            bad(key + ".pricing", "prices must not be negative");
    }
    if (const json* v = member(j, "supports_n")) h.supports_n = as_bool(*v, key + ".supports_n");
    if (const json* v = member(j, "supports_images")) h.supports_images = as_bool(*v, key + ".supports_images");
    if (const json* v = member(j, "base_url")) h.base_url = as_string(*v, key + ".base_url");
    if (const json* v = member(j, "api_key_env")) h.api_key_env = as_string(*v, key + ".api_key_env");
    if (const json* v = member(j, "image_urls")) h.image_urls = as_bool(*v, key + ".image_urls");
    if (member(j, "api_key")) bad(key + ".api_key", "credentials belong in the environment, not the config");
    if (h.provider == "mock") {
        if (!member(j, "mock")) bad(key + ".mock", "mock handles need a script list");
    } else if (!builtin_provider(h.provider) && (h.base_url.empty() || h.api_key_env.empty())) {
        bad(key, "provider \"" + h.provider + "\" is not built in; set base_url and api_key_env");
    }
    return h;
}

}  // namespace

json load_config_document(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IOFailure, "cannot read config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
    }
    if (!doc.is_object() || doc.value("format", "") != "refer-config")
        throw Error(ErrorCode::InvalidConfig, path.string() + ": not a refer-config document");
    if (doc.value("version", 0) != kConfigFormatVersion)
        throw Error(ErrorCode::UnknownFormatVersion, path.string() + ": config version " +
                                                         doc.value("version", json()).dump() + " is not supported");
    return doc;
}

void apply_override(json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw Error(ErrorCode::InvalidConfig, "override \"" + std::string(assignment) + "\" is not key=value");
    const std::string path(assignment.substr(0, eq));
    const std::string raw(assignment.substr(eq + 1));
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    json* node = &doc;
    const auto parts = text::split(path, '.');
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].empty()) throw Error(ErrorCode::InvalidConfig, "override key \"" + path + "\" has an empty segment");
        if (node->is_null()) *node = json::object();
        if (!node->is_object())
            throw Error(ErrorCode::InvalidConfig, "override key \"" + path + "\" descends into a non-object");
        node = &(*node)[parts[i]];
    }
    *node = std::move(value);
}

AppConfig parse_config(const json& doc) {
    AppConfig cfg;
    cfg.doc = doc;
    const json* models = member(doc, "models");
    if (!models || !models->is_object() || models->empty()) bad("models", "at least one model handle is required");
    for (const auto& [name, j] : models->items()) {
        cfg.models[name] = parse_handle(name, j);
        if (const json* m = member(j, "mock")) cfg.mock_scripts[name] = *m;
    }

    if (const json* r = member(doc, "retry")) {
        if (const json* v = member(*r, "max_attempts")) cfg.retry.max_attempts = static_cast<int>(as_int(*v, "retry.max_attempts"));
        if (const json* v = member(*r, "initial_backoff_ms")) cfg.retry.initial_backoff = millis(*v, "retry.initial_backoff_ms");
        if (const json* v = member(*r, "multiplier")) cfg.retry.multiplier = as_number(*v, "retry.multiplier");
        if (const json* v = member(*r, "max_backoff_ms")) cfg.retry.max_backoff = millis(*v, "retry.max_backoff_ms");
        if (cfg.retry.max_attempts < 1) bad("retry.max_attempts", "must be at least 1");
        if (cfg.retry.multiplier < 1.0) bad("retry.multiplier", "must be at least 1");
    }
    if (const json* r = member(doc, "rate_limits")) {
        if (!r->is_object()) bad("rate_limits", "expected provider -> requests per minute");
        for (const auto& [provider, v] : r->items()) {
            const double rpm = as_number(v, "rate_limits." + provider);
            if (rpm <= 0) bad("rate_limits." + provider, "must be positive");
            cfg.rate_limits[provider] = rpm;
        }
    }

    const json empty = json::object();
    const json* run = member(doc, "run");
    const json& r = run ? *run : empty;
    if (const json* v = member(r, "peers")) cfg.peers = as_names(*v, "run.peers");
    if (const json* v = member(r, "area_chair")) cfg.area_chair = as_string(*v, "run.area_chair");
    if (const json* v = member(r, "variant")) {
        auto variant = parse_variant(as_string(*v, "run.variant"));
        if (!variant) bad("run.variant", "expected turbo or lite");
        cfg.variant = *variant;
    }
    if (const json* v = member(r, "n")) cfg.n = static_cast<int>(as_int(*v, "run.n"));
    if (const json* v = member(r, "strategy")) {
        auto s = parse_strategy(as_string(*v, "run.strategy"));
        if (!s) bad("run.strategy", "expected score_only, comment_only or both");
        cfg.strategy = *s;
    }
    if (const json* v = member(r, "min_peers")) cfg.min_peers = static_cast<int>(as_int(*v, "run.min_peers"));
    if (const json* v = member(r, "metrics")) cfg.metrics = as_names(*v, "run.metrics");
    if (const json* v = member(r, "concurrency")) {
        cfg.concurrency = static_cast<int>(as_int(*v, "run.concurrency"));
        if (cfg.concurrency < 1) bad("run.concurrency", "must be at least 1");
    }
    if (const json* v = member(r, "seed_tag")) cfg.seed_tag = as_string(*v, "run.seed_tag");
    if (const json* v = member(r, "method")) cfg.method = as_string(*v, "run.method");
    if (const json* v = member(r, "peer_params")) cfg.peer_params = *v;
    if (const json* v = member(r, "ac_params")) cfg.ac_params = *v;
    merge_hyperparameters({}, cfg.peer_params);
    merge_hyperparameters({}, cfg.ac_params);

    if (const json* v = member(doc, "schema_dir")) cfg.schema_dir = as_string(*v, "schema_dir");
    if (const json* v = member(doc, "cache_dir")) cfg.cache_dir = as_string(*v, "cache_dir");
    if (const json* a = member(doc, "auto_prompt")) {
        if (const json* v = member(*a, "enabled")) cfg.auto_prompt.enabled = as_bool(*v, "auto_prompt.enabled");
        if (const json* v = member(*a, "model")) cfg.auto_prompt.model = as_string(*v, "auto_prompt.model");
        if (const json* v = member(*a, "examples")) {
            const auto e = as_int(*v, "auto_prompt.examples");
            if (e < 1) bad("auto_prompt.examples", "must be at least 1");
            cfg.auto_prompt.examples = static_cast<std::size_t>(e);
        }
        if (const json* v = member(*a, "params")) cfg.auto_prompt.params = *v;
        merge_hyperparameters({}, cfg.auto_prompt.params);
    }

    for (const auto& p : cfg.peers)
        if (!cfg.models.contains(p)) bad("run.peers", "unknown model handle \"" + p + "\"");
    if (!cfg.area_chair.empty() && !cfg.models.contains(cfg.area_chair))
        bad("run.area_chair", "unknown model handle \"" + cfg.area_chair + "\"");
    if (!cfg.auto_prompt.model.empty() && !cfg.models.contains(cfg.auto_prompt.model))
        bad("auto_prompt.model", "unknown model handle \"" + cfg.auto_prompt.model + "\"");
    return cfg;
}

Hyperparameters merge_hyperparameters(Hyperparameters base, const json& o) {
    if (!o.is_object()) bad("params", "expected an object");
    for (const auto& [k, v] : o.items()) {
        if (k == "temperature") base.temperature = as_number(v, "params.temperature");
        else if (k == "top_p") base.top_p = as_number(v, "params.top_p");
        else if (k == "max_tokens") {
            if (v.is_null()) base.max_tokens.reset();
            else base.max_tokens = static_cast<int>(as_int(v, "params.max_tokens"));
        } else bad("params." + k, "unknown hyperparameter");
    }
    return base;
}

std::shared_ptr<MockBackend> build_mock_backend(const json& scripts) {
    if (!scripts.is_array()) bad("mock", "expected a list of scripts");
    auto backend = std::make_shared<MockBackend>();
    for (const auto& s : scripts) {
        const json* match = member(s, "match");
        const json* replies = member(s, "replies");
        if (!match || !replies || !replies->is_array() || replies->empty())
            bad("mock", "each script needs match and a non-empty replies list");
        std::vector<MockReply> out;
        for (const auto& r : *replies) {
            if (r.is_string()) out.push_back(MockReply::text(r.get<std::string>()));
            else if (const json* f = member(r, "fail")) out.push_back(MockReply::failure(failure_class(as_string(*f, "mock.fail"))));
            else bad("mock.replies", "expected a string or {\"fail\": class}");
        }
        backend->script(matcher_from_json(*match), std::move(out));
    }
    return backend;
}

void register_backends(Gateway& gateway, const AppConfig& cfg, const EnvLookup& env) {
    std::shared_ptr<HttpBackend> http;
    for (const auto& [name, handle] : cfg.models) {
        if (handle.provider == "mock") {
            gateway.register_backend(name, build_mock_backend(cfg.mock_scripts.at(name)));
        } else {
            if (!http) http = std::make_shared<HttpBackend>(env);
            gateway.register_backend(name, http);
        }
    }
    for (const auto& [provider, rpm] : cfg.rate_limits) gateway.set_rate_limit(provider, rpm);
}

RunConfig make_run_config(const AppConfig& cfg, const Dataset& dataset, std::map<std::string, SchemaPair> schemas) {
    if (cfg.peers.empty()) bad("run.peers", "at least one peer is required");
    if (cfg.area_chair.empty()) bad("run.area_chair", "is required");
    RunConfig rc;
    for (const auto& p : cfg.peers) rc.peers.push_back(cfg.models.at(p));
    rc.area_chair = cfg.models.at(cfg.area_chair);
    rc.variant = cfg.variant;
    rc.n = cfg.n.value_or(cfg.variant == Variant::Turbo ? kTurboDefaultN : 1);
    rc.task_kind = dataset.task_kind();
    rc.strategy = cfg.strategy.value_or(rc.task_kind == TaskKind::Rating ? CommunicationStrategy::ScoreOnly
                                                                         : CommunicationStrategy::Both);
    rc.min_peers = cfg.min_peers.value_or(default_min_peers(rc.peers.size()));
    rc.schemas = std::move(schemas);
    rc.answer_space = dataset.answer_space;
    rc.peer_params = merge_hyperparameters(default_hyperparameters(Role::Peer, dataset.kind), cfg.peer_params);
    rc.ac_params = merge_hyperparameters(default_hyperparameters(Role::AreaChair, dataset.kind), cfg.ac_params);
    rc.retry = cfg.retry;
    rc.method = cfg.method;
    rc.seed_tag = cfg.seed_tag;
    validate_run_config(rc);
    return rc;
}

namespace {

ojson params_json(const Hyperparameters& h) {
    ojson j{{"temperature", h.temperature}, {"top_p", h.top_p}};
    j["max_tokens"] = h.max_tokens ? ojson(*h.max_tokens) : ojson(nullptr);
    return j;
}

ojson handle_json(const ModelHandle& h) {
    return ojson{{"provider", h.provider},
                 {"model_id", h.model_id},
                 {"input_per_1k", h.pricing.input_per_1k.to_string()},
                 {"output_per_1k", h.pricing.output_per_1k.to_string()},
                 {"supports_n", h.supports_n},
                 {"supports_images", h.supports_images}};
}

}  // namespace

ojson config_snapshot(const AppConfig& cfg, const RunConfig& run) {
    ojson peers = ojson::array();
    for (const auto& p : run.peers) peers.push_back(ojson{{"name", p.name}, {"handle", handle_json(p)}});
    ojson retry{{"max_attempts", cfg.retry.max_attempts},
                {"initial_backoff_ms", std::chrono::duration_cast<std::chrono::milliseconds>(cfg.retry.initial_backoff).count()},
                {"multiplier", cfg.retry.multiplier},
                {"max_backoff_ms", std::chrono::duration_cast<std::chrono::milliseconds>(cfg.retry.max_backoff).count()}};
    return ojson{{"peers", std::move(peers)},
                 {"area_chair", ojson{{"name", run.area_chair.name}, {"handle", handle_json(run.area_chair)}}},
                 {"variant", std::string(to_string(run.variant))},
                 {"n", run.n},
                 {"strategy", std::string(to_string(run.strategy))},
                 {"min_peers", run.min_peers},
                 {"peer_params", params_json(run.peer_params)},
                 {"ac_params", params_json(run.ac_params)},
                 {"retry", std::move(retry)},
                 {"method", run.method_name()},
                 {"seed_tag", run.seed_tag}};
}

}  // namespace refer
