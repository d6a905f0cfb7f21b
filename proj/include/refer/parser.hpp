#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "refer/types.hpp"

namespace refer {

/// A parsed rating review: the comment text and the numeric score.
struct ReviewOutcome {
    std::string analysis;
    Rational score;
    std::string raw;
    friend bool operator==(const ReviewOutcome&, const ReviewOutcome&) = default;
};

/// A parsed reasoning response: the explanation and the normalized answer.
struct AnswerOutcome {
    std::string analysis;
    Answer answer;
    std::string raw;
    friend bool operator==(const AnswerOutcome&, const AnswerOutcome&) = default;
};

using Outcome = std::variant<ReviewOutcome, AnswerOutcome>;

const std::string& analysis_of(const Outcome& o);
const std::string& raw_of(const Outcome& o);

/// Extracts (analysis, score) from a completion.
///
/// The rating is taken from the last line that starts with `Rating:`;
/// failing that, the last `<metric_name>:` line carrying a number; failing
/// that, the last line consisting of a bare number. Leading bullets and
/// markdown emphasis are ignored, as is a parenthesized range between the
/// key and the colon ("Rating (1-3): 2"). Integer scales round half away
/// from zero before the range check. Nothing is clamped.
///
/// Throws Error{NoRatingFound} or Error{OutOfScale}.
ReviewOutcome parse_rating(std::string_view text, const ScoreScale& scale, std::string_view metric_name);

/// Extracts the final answer following the last "Answer" marker.
///
/// Labels: the last standalone capital letter A-F (or a parenthesized
/// lower-case one) on the marker line, or on the next non-empty line when
/// the marker line carries none. Numbers: the last numeral there, with
/// thousands separators and currency signs removed.
///
/// Throws Error{NoAnswerFound} or Error{LabelOutsideSpace}.
AnswerOutcome parse_answer(std::string_view text, const AnswerSpace& space);

/// Normalizes a gold answer string ("(c)", "1,234") with the same rules.
std::optional<Answer> normalize_answer(std::string_view text, const AnswerSpace& space);

}  // namespace refer
