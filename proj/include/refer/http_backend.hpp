#pragma once

#include <functional>
#include <optional>
#include <string>

#include "refer/gateway.hpp"

namespace refer {

/// Defaults for a named provider. All providers speak the OpenAI
/// chat-completions wire format.
struct ProviderInfo {
    std::string base_url;
    std::string api_key_env;
    bool image_urls = true;
};

/// openai, together and gemini are built in; anything else needs base_url
/// and api_key_env on the handle.
std::optional<ProviderInfo> builtin_provider(std::string_view provider);

using EnvLookup = std::function<std::optional<std::string>(const std::string& name)>;
EnvLookup process_env();

/// Chat-completions client over HTTP(S).
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(EnvLookup env = process_env(), int timeout_seconds = 120);

    BackendReply complete(const ChatRequest& request, const ModelHandle& handle) override;

    /// Request body as sent on the wire; exposed for tests.
    static std::string request_body(const ChatRequest& request, const ModelHandle& handle, bool image_urls);

private:
    EnvLookup env_;
    int timeout_seconds_;
};

/// GET a URL (redirects followed). Throws Error{IOFailure}.
std::string http_fetch(const std::string& url, int timeout_seconds = 60);

}  // namespace refer
