#pragma once

#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "refer/gateway.hpp"

namespace refer {

/// One scripted reply: a completion, or a failed attempt of the given class.
struct MockReply {
    std::variant<std::string, FailureClass> value;

    static MockReply text(std::string s) { return MockReply{std::move(s)}; }
    static MockReply failure(FailureClass c = FailureClass::Transient) { return MockReply{c}; }
};

using PromptMatcher = std::function<bool(std::string_view prompt)>;

PromptMatcher contains(std::string needle);
PromptMatcher contains_all(std::vector<std::string> needles);
PromptMatcher matches_regex(const std::string& pattern);
PromptMatcher any_prompt();

/// Deterministic scripted backend. Each script owns a cursor that cycles
/// through its replies; a call with n completions consumes n replies. The
/// first script whose matcher accepts the prompt serves it. Prompts no
/// script accepts raise Error{UnscriptedPrompt}.
///
/// Usage is synthetic: ceil(bytes / 4) tokens for the prompt and for each
/// completion.
class MockBackend final : public Backend {
public:
    void script(PromptMatcher matcher, std::vector<MockReply> replies);
    void script(PromptMatcher matcher, const std::vector<std::string>& completions);

    BackendReply complete(const ChatRequest& request, const ModelHandle& handle) override;

    std::size_t calls() const;
    std::vector<std::string> prompts() const;
    std::vector<int> requested_n() const;

private:
    struct Script {
        PromptMatcher matcher;
        std::vector<MockReply> replies;
        std::size_t cursor = 0;
    };
    mutable std::mutex mu_;
    std::vector<Script> scripts_;
    std::vector<std::string> prompts_;
    std::vector<int> requested_n_;
};

std::int64_t mock_token_count(std::string_view text);

}  // namespace refer
