#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "refer/http_backend.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "refer/hash.hpp"

namespace refer {

std::optional<ProviderInfo> builtin_provider(std::string_view provider) {
    if (provider == "openai") return ProviderInfo{"https://api.openai.com/v1", "OPENAI_API_KEY", true};
    if (provider == "together") return ProviderInfo{"https://api.together.xyz/v1", "TOGETHER_API_KEY", true};
    if (provider == "gemini")
        return ProviderInfo{"https://generativelanguage.googleapis.com/v1beta/openai", "GEMINI_API_KEY", false};
    return std::nullopt;
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str()); v && *v) return std::string(v);
        return std::nullopt;
    };
}

namespace {

struct Endpoint {
    std::string scheme_host_port;
    std::string path_prefix;
};

Endpoint split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidConfig, "base_url needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_start), prefix};
}

ProviderInfo resolve(const ModelHandle& handle) {
    ProviderInfo info = builtin_provider(handle.provider).value_or(ProviderInfo{});
    if (!handle.base_url.empty()) info.base_url = handle.base_url;
    if (!handle.api_key_env.empty()) info.api_key_env = handle.api_key_env;
    if (handle.image_urls) info.image_urls = *handle.image_urls;
    if (info.base_url.empty())
        throw Error(ErrorCode::InvalidConfig, "model '" + handle.name + "' (provider " + handle.provider + ") needs base_url");
    return info;
}

std::string image_reference(const ImageAttachment& img, bool image_urls) {
    if (img.is_url()) {
        if (image_urls) return img.location;
        throw Error(ErrorCode::UnsupportedImage,
                    "provider only accepts inline images and '" + img.location + "' was not prefetched");
    }
    std::ifstream in(img.location, std::ios::binary);
    if (!in) throw Error(ErrorCode::IOFailure, "cannot read image " + img.location);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return "data:" + img.mime + ";base64," + hash::base64(bytes);
}

FailureClass classify(int status) {
    if (status == 429) return FailureClass::RateLimited;
    if (status == 401 || status == 403) return FailureClass::Auth;
    if (status >= 500) return FailureClass::Server;
    return FailureClass::Client;
}

}  // namespace

std::string HttpBackend::request_body(const ChatRequest& request, const ModelHandle& handle, bool image_urls) {
    nlohmann::json content;
    if (request.image) {
        content = nlohmann::json::array(
            {{{"type", "text"}, {"text", request.prompt}},
             {{"type", "image_url"}, {"image_url", {{"url", image_reference(*request.image, image_urls)}}}}});
    } else {
        content = request.prompt;
    }
    nlohmann::json body{{"model", handle.model_id},
                        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})},
                        {"n", request.n},
                        {"temperature", request.temperature},
                        {"top_p", request.top_p}};
    if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
    if (!request.stop.empty()) body["stop"] = request.stop;
    return body.dump();
}

HttpBackend::HttpBackend(EnvLookup env, int timeout_seconds) : env_(std::move(env)), timeout_seconds_(timeout_seconds) {}

BackendReply HttpBackend::complete(const ChatRequest& request, const ModelHandle& handle) {
    const ProviderInfo info = resolve(handle);
    std::optional<std::string> key;
    if (!info.api_key_env.empty()) {
        key = env_(info.api_key_env);
        if (!key) throw BackendError(FailureClass::Auth, "environment variable " + info.api_key_env + " is not set");
    }
    const Endpoint ep = split_url(info.base_url);
    const std::string body = request_body(request, handle, info.image_urls);

    httplib::Client client(ep.scheme_host_port);
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    client.set_write_timeout(timeout_seconds_, 0);
    httplib::Headers headers;
    if (key) headers.emplace("Authorization", "Bearer " + *key);

    auto res = client.Post(ep.path_prefix + "/chat/completions", headers, body, "application/json");
    if (!res) throw BackendError(FailureClass::Transient, "request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw BackendError(classify(res->status), "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300));

    BackendReply reply;
    try {
        const auto doc = nlohmann::json::parse(res->body);
        for (const auto& choice : doc.at("choices")) {
            const auto& content = choice.at("message").at("content");
            reply.completions.push_back(content.is_string() ? content.get<std::string>() : std::string());
        }
        if (doc.contains("usage") && doc.at("usage").is_object()) {
            reply.usage.input_tokens = doc.at("usage").value("prompt_tokens", std::int64_t{0});
            reply.usage.output_tokens = doc.at("usage").value("completion_tokens", std::int64_t{0});
        }
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(FailureClass::Server, std::string("malformed response body: ") + e.what());
    }
    return reply;
}

std::string http_fetch(const std::string& url, int timeout_seconds) {
    const Endpoint ep = split_url(url);
    httplib::Client client(ep.scheme_host_port);
    client.set_connection_timeout(timeout_seconds, 0);
    client.set_read_timeout(timeout_seconds, 0);
    client.set_follow_location(true);
    auto res = client.Get(ep.path_prefix.empty() ? "/" : ep.path_prefix);
    if (!res) throw Error(ErrorCode::IOFailure, "fetch " + url + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw Error(ErrorCode::IOFailure, "fetch " + url + ": HTTP " + std::to_string(res->status));
    return res->body;
}

}  // namespace refer
