#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "refer/rational.hpp"

namespace refer {

enum class TaskKind { Rating, Reasoning };
enum class Role { Peer, AreaChair };
enum class Granularity { Integer, Continuous };

/// Which parts of each peer review the area chair gets to see.
enum class CommunicationStrategy { ScoreOnly, CommentOnly, Both };

std::string_view to_string(TaskKind kind);
std::string_view to_string(Role role);
std::string_view to_string(Granularity g);
std::string_view to_string(CommunicationStrategy s);

std::optional<TaskKind> parse_task_kind(std::string_view text);
std::optional<Role> parse_role(std::string_view text);
std::optional<Granularity> parse_granularity(std::string_view text);
std::optional<CommunicationStrategy> parse_strategy(std::string_view text);

struct ScoreScale {
    Rational min;
    Rational max;
    Granularity granularity = Granularity::Integer;

    Rational range() const { return max - min; }
    bool contains(const Rational& v) const { return min <= v && v <= max; }
    friend bool operator==(const ScoreScale&, const ScoreScale&) = default;
};

/// A normalized reasoning answer: either a single option label or an exact number.
class Answer {
public:
    Answer() = default;
    static Answer label(char c) { return Answer(Value{c}); }
    static Answer number(Rational r) { return Answer(Value{r}); }

    bool is_label() const { return std::holds_alternative<char>(value_); }
    char as_label() const { return std::get<char>(value_); }
    const Rational& as_number() const { return std::get<Rational>(value_); }

    /// "C" or the exact decimal form of the number.
    std::string to_string() const;

    friend bool operator==(const Answer&, const Answer&) = default;

private:
    using Value = std::variant<char, Rational>;
    explicit Answer(Value v) : value_(v) {}
    Value value_ = '?';
};

struct AnswerSpace {
    enum class Kind { Labels, Number };
    Kind kind = Kind::Labels;
    std::set<char> labels;

    static AnswerSpace letters(char first, char last);
    static AnswerSpace numeric() { return AnswerSpace{Kind::Number, {}}; }
    friend bool operator==(const AnswerSpace&, const AnswerSpace&) = default;
};

enum class DatasetKind { NlgRating, MultimodalRating, Reasoning };
std::string_view to_string(DatasetKind kind);
std::optional<DatasetKind> parse_dataset_kind(std::string_view text);

struct Sample {
    std::string id;
    std::map<std::string, std::string> slots;
    std::optional<std::string> image;  // URL or local path
    std::map<std::string, Rational> human_scores;
    std::optional<Answer> gold_answer;
    std::optional<ScoreScale> scale;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
    std::string name;
    DatasetKind kind = DatasetKind::NlgRating;
    std::vector<Sample> samples;
    std::vector<std::string> metrics;
    std::optional<ScoreScale> scale;
    std::optional<AnswerSpace> answer_space;

    TaskKind task_kind() const {
        return kind == DatasetKind::Reasoning ? TaskKind::Reasoning : TaskKind::Rating;
    }
    const Sample* find(std::string_view id) const;
};

}  // namespace refer
