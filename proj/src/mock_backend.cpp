#include "refer/mock_backend.hpp"

#include <regex>

namespace refer {

PromptMatcher contains(std::string needle) {
    return [needle = std::move(needle)](std::string_view p) { return p.find(needle) != std::string_view::npos; };
}

PromptMatcher contains_all(std::vector<std::string> needles) {
    return [needles = std::move(needles)](std::string_view p) {
        for (const auto& n : needles)
            if (p.find(n) == std::string_view::npos) return false;
        return true;
    };
}

PromptMatcher matches_regex(const std::string& pattern) {
    auto re = std::make_shared<const std::regex>(pattern);
    return [re](std::string_view p) { return std::regex_search(p.begin(), p.end(), *re); };
}

PromptMatcher any_prompt() {
    return [](std::string_view) { return true; };
}

std::int64_t mock_token_count(std::string_view text) { return static_cast<std::int64_t>((text.size() + 3) / 4); }

void MockBackend::script(PromptMatcher matcher, std::vector<MockReply> replies) {
    std::lock_guard lock(mu_);
    scripts_.push_back(Script{std::move(matcher), std::move(replies), 0});
}

void MockBackend::script(PromptMatcher matcher, const std::vector<std::string>& completions) {
    std::vector<MockReply> replies;
    for (const auto& c : completions) replies.push_back(MockReply::text(c));
    script(std::move(matcher), std::move(replies));
}

BackendReply MockBackend::complete(const ChatRequest& request, const ModelHandle& handle) {
    std::lock_guard lock(mu_);
    prompts_.push_back(request.prompt);
    requested_n_.push_back(request.n);
    for (auto& s : scripts_) {
        if (!s.matcher(request.prompt)) continue;
        if (s.replies.empty()) throw Error(ErrorCode::UnscriptedPrompt, "script for '" + handle.name + "' has no replies");
        BackendReply reply;
        reply.usage.input_tokens = mock_token_count(request.prompt);
        std::optional<FailureClass> failure;
        for (int i = 0; i < request.n; ++i) {
            const MockReply& r = s.replies[s.cursor];
            s.cursor = (s.cursor + 1) % s.replies.size();
            if (const auto* f = std::get_if<FailureClass>(&r.value)) {
                failure = *f;
                continue;
            }
            const auto& text = std::get<std::string>(r.value);
            reply.usage.output_tokens += mock_token_count(text);
            reply.completions.push_back(text);
        }
        if (failure) throw BackendError(*failure, "scripted failure from mock '" + handle.name + "'");
        return reply;
    }
    std::string head = request.prompt.substr(0, 80);
    throw Error(ErrorCode::UnscriptedPrompt, "mock '" + handle.name + "' has no script matching prompt: " + head);
}

std::size_t MockBackend::calls() const {
    std::lock_guard lock(mu_);
    return prompts_.size();
}

std::vector<std::string> MockBackend::prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
}

std::vector<int> MockBackend::requested_n() const {
    std::lock_guard lock(mu_);
    return requested_n_;
}

}  // namespace refer
