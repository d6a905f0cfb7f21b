#include "refer/types.hpp"

namespace refer {

std::string_view to_string(TaskKind kind) {
    return kind == TaskKind::Rating ? "rating" : "reasoning";
}

std::string_view to_string(Role role) {
    return role == Role::Peer ? "peer" : "area_chair";
}

std::string_view to_string(Granularity g) {
    return g == Granularity::Integer ? "integer" : "continuous";
}

std::string_view to_string(CommunicationStrategy s) {
    switch (s) {
        case CommunicationStrategy::ScoreOnly: return "score_only";
        case CommunicationStrategy::CommentOnly: return "comment_only";
        case CommunicationStrategy::Both: return "both";
    }
    return "both";
}

std::string_view to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::NlgRating: return "nlg_rating";
        case DatasetKind::MultimodalRating: return "multimodal_rating";
        case DatasetKind::Reasoning: return "reasoning";
    }
    return "nlg_rating";
}

std::optional<TaskKind> parse_task_kind(std::string_view text) {
    if (text == "rating") return TaskKind::Rating;
    if (text == "reasoning") return TaskKind::Reasoning;
    return std::nullopt;
}

std::optional<Role> parse_role(std::string_view text) {
    if (text == "peer") return Role::Peer;
    if (text == "area_chair") return Role::AreaChair;
    return std::nullopt;
}

std::optional<Granularity> parse_granularity(std::string_view text) {
    if (text == "integer") return Granularity::Integer;
    if (text == "continuous") return Granularity::Continuous;
    return std::nullopt;
}

std::optional<CommunicationStrategy> parse_strategy(std::string_view text) {
    if (text == "score_only") return CommunicationStrategy::ScoreOnly;
    if (text == "comment_only") return CommunicationStrategy::CommentOnly;
    if (text == "both") return CommunicationStrategy::Both;
    return std::nullopt;
}

std::optional<DatasetKind> parse_dataset_kind(std::string_view text) {
    if (text == "nlg_rating") return DatasetKind::NlgRating;
    if (text == "multimodal_rating") return DatasetKind::MultimodalRating;
    if (text == "reasoning") return DatasetKind::Reasoning;
    return std::nullopt;
}

std::string Answer::to_string() const {
    if (is_label()) return std::string(1, as_label());
    return as_number().to_string();
}

AnswerSpace AnswerSpace::letters(char first, char last) {
    AnswerSpace space;
    space.kind = Kind::Labels;
    for (char c = first; c <= last; ++c) space.labels.insert(c);
    return space;
}

const Sample* Dataset::find(std::string_view id) const {
    for (const auto& s : samples)
        if (s.id == id) return &s;
    return nullptr;
}

}  // namespace refer
