#include "refer/parser.hpp"

#include <regex>

#include "refer/error.hpp"
#include "refer/text.hpp"

namespace refer {
namespace {

const std::regex& number_re() {
    static const std::regex re(R"([-+]?\d+(?:\.\d+)?)");
    return re;
}

const std::regex& bare_number_re() {
    static const std::regex re(R"(^[-+]?\d+(?:\.\d+)?\s*(?:/\s*\d+(?:\.\d+)?)?\s*\.?$)");
    return re;
}

// Returns the text after "<key> [(...)]:" when the decorated line starts with key.
std::optional<std::string_view> key_value(std::string_view line, std::string_view folded_key) {
    line = text::strip_decoration(line);
    if (line.size() < folded_key.size()) return std::nullopt;
    if (text::fold_key(line.substr(0, folded_key.size())) != folded_key) return std::nullopt;
    auto rest = line.substr(folded_key.size());
    auto skip = [&rest] {
        while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t' || rest.front() == '*'))
            rest.remove_prefix(1);
    };
    skip();
    if (!rest.empty() && rest.front() == '(') {
        auto close = rest.find(')');
        if (close == std::string_view::npos) return std::nullopt;
        rest.remove_prefix(close + 1);
        skip();
    }
    if (rest.empty() || rest.front() != ':') return std::nullopt;
    rest.remove_prefix(1);
    return rest;
}

std::optional<std::string> first_number(std::string_view s) {
    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_search(s.begin(), s.end(), m, number_re())) return m.str();
    return std::nullopt;
}

bool is_bare_number(std::string_view line) {
    auto s = text::strip_decoration(line);
    std::string cleaned;
    for (char c : s)
        if (c != '*') cleaned += c;
    return std::regex_match(cleaned, bare_number_re());
}

struct Candidate {
    std::size_t line = 0;
    std::string number;
};

std::optional<Candidate> last_keyed(const std::vector<std::string_view>& lines, std::string_view folded_key,
                                    std::size_t from) {
    std::optional<Candidate> found;
    for (std::size_t i = from; i < lines.size(); ++i) {
        auto rest = key_value(lines[i], folded_key);
        if (!rest) continue;
        if (auto n = first_number(*rest)) {
            found = Candidate{i, *n};
            continue;
        }
        // "Rating:" alone with the value on the following line
        for (std::size_t j = i + 1; j < lines.size(); ++j) {
            if (text::trim(lines[j]).empty()) continue;
            if (is_bare_number(lines[j])) found = Candidate{i, *first_number(lines[j])};
            break;
        }
    }
    return found;
}

// Byte offset of the start of line `index` within `whole`.
std::size_t line_offset(std::string_view whole, const std::vector<std::string_view>& lines, std::size_t index) {
    return static_cast<std::size_t>(lines[index].data() - whole.data());
}

std::string clean_analysis(std::string_view s) {
    s = text::trim(s);
    while (!s.empty() && s.front() == '*') s.remove_prefix(1);
    return std::string(text::trim(s));
}

// Case-insensitive position of the first "analysis:" marker; npos if absent.
std::size_t find_analysis_marker(std::string_view s) {
    const std::string lower = text::to_lower(s);
    return lower.find("analysis:");
}

}  // namespace

const std::string& analysis_of(const Outcome& o) {
    return std::visit([](const auto& v) -> const std::string& { return v.analysis; }, o);
}

const std::string& raw_of(const Outcome& o) {
    return std::visit([](const auto& v) -> const std::string& { return v.raw; }, o);
}

ReviewOutcome parse_rating(std::string_view input, const ScoreScale& scale, std::string_view metric_name) {
    const auto lines = text::split_lines(input);
    const std::size_t marker = find_analysis_marker(input);

    std::size_t first_line_after_marker = 0;
    if (marker != std::string_view::npos) {
        for (std::size_t i = 0; i < lines.size(); ++i)
            if (line_offset(input, lines, i) <= marker) first_line_after_marker = i;
    }

    auto found = last_keyed(lines, "rating", 0);
    if (!found && !metric_name.empty()) {
        const std::string folded = text::fold_key(metric_name);
        if (folded != "rating") found = last_keyed(lines, folded, 0);
    }
    if (!found) {
        // A bare number line after the analysis; the marker line itself does not count.
        const std::size_t from = marker != std::string_view::npos ? first_line_after_marker + 1 : 0;
        for (std::size_t i = from; i < lines.size(); ++i)
            if (is_bare_number(lines[i])) found = Candidate{i, *first_number(lines[i])};
    }
    if (!found) throw Error(ErrorCode::NoRatingFound, "no rating line in completion");

    auto value = Rational::parse(found->number);
    if (!value) throw Error(ErrorCode::NoRatingFound, "rating is not a number: " + found->number);
    Rational score = scale.granularity == Granularity::Integer ? value->round() : *value;
    if (!scale.contains(score))
        throw Error(ErrorCode::OutOfScale, "rating " + score.to_string() + " outside [" + scale.min.to_string() +
                                               ", " + scale.max.to_string() + "]");

    const std::size_t rating_at = line_offset(input, lines, found->line);
    std::string analysis;
    if (marker != std::string_view::npos) {
        const std::size_t start = marker + std::string_view("analysis:").size();
        const std::size_t end = rating_at > start ? rating_at : input.size();
        analysis = clean_analysis(input.substr(start, end - start));
    } else {
        analysis = clean_analysis(input.substr(0, rating_at));
    }
    return ReviewOutcome{std::move(analysis), score, std::string(input)};
}

namespace {

const std::regex& answer_number_re() {
    static const std::regex re(R"([-+]?\$?\d{1,3}(?:,\d{3})+(?:\.\d+)?|[-+]?\$?\d+(?:\.\d+)?)");
    return re;
}

bool is_word_char(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

std::vector<std::size_t> answer_markers(std::string_view s) {
    const std::string lower = text::to_lower(s);
    std::vector<std::size_t> out;
    for (std::size_t pos = lower.find("answer"); pos != std::string::npos; pos = lower.find("answer", pos + 1)) {
        const bool left_ok = pos == 0 || !is_word_char(lower[pos - 1]);
        const std::size_t after = pos + 6;
        const bool right_ok = after >= lower.size() || !is_word_char(lower[after]);
        if (left_ok && right_ok) out.push_back(pos);
    }
    return out;
}

std::optional<Answer> last_label(std::string_view segment) {
    std::optional<Answer> found;
    std::size_t i = 0;
    while (i < segment.size()) {
        while (i < segment.size() && std::isspace(static_cast<unsigned char>(segment[i]))) ++i;
        std::size_t j = i;
        while (j < segment.size() && !std::isspace(static_cast<unsigned char>(segment[j]))) ++j;
        std::string_view token = segment.substr(i, j - i);
        i = j;
        if (token.empty()) continue;
        const bool bracketed = token.find_first_of("([{") != std::string_view::npos &&
                               token.find_first_of(")]}") != std::string_view::npos;
        static constexpr std::string_view punct = "()[]{}.,:;!?*\"'`";
        while (!token.empty() && punct.find(token.front()) != std::string_view::npos) token.remove_prefix(1);
        while (!token.empty() && punct.find(token.back()) != std::string_view::npos) token.remove_suffix(1);
        if (token.size() != 1) continue;
        const char c = token.front();
        if (c >= 'A' && c <= 'F') found = Answer::label(c);
        else if (bracketed && c >= 'a' && c <= 'f') found = Answer::label(static_cast<char>(c - 'a' + 'A'));
    }
    return found;
}

std::optional<Answer> last_number(std::string_view segment) {
    std::optional<Answer> found;
    std::string s(segment);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), answer_number_re()); it != std::sregex_iterator(); ++it) {
        std::string digits;
        for (char c : it->str())
            if (c != ',' && c != '$') digits += c;
        if (auto r = Rational::parse(digits)) found = Answer::number(*r);
    }
    return found;
}

std::optional<Answer> find_candidate(std::string_view segment, const AnswerSpace& space) {
    return space.kind == AnswerSpace::Kind::Labels ? last_label(segment) : last_number(segment);
}

}  // namespace

AnswerOutcome parse_answer(std::string_view input, const AnswerSpace& space) {
    const auto markers = answer_markers(input);
    std::optional<Answer> answer;
    std::size_t used_marker = std::string_view::npos;
    for (auto it = markers.rbegin(); it != markers.rend() && !answer; ++it) {
        const std::size_t start = *it + 6;
        auto rest = input.substr(start);
        auto nl = rest.find('\n');
        answer = find_candidate(rest.substr(0, nl), space);
        if (!answer && nl != std::string_view::npos) {
            auto following = text::split_lines(rest.substr(nl + 1));
            for (auto line : following) {
                if (text::trim(line).empty()) continue;
                answer = find_candidate(line, space);
                break;
            }
        }
        if (answer) used_marker = *it;
    }
    if (!answer) throw Error(ErrorCode::NoAnswerFound, "no answer after an Answer marker");
    if (space.kind == AnswerSpace::Kind::Labels && !space.labels.contains(answer->as_label()))
        throw Error(ErrorCode::LabelOutsideSpace, "label " + answer->to_string() + " not in answer space");

    std::string analysis;
    const std::size_t marker = find_analysis_marker(input);
    // Analysis runs from its marker to the start of the line holding the answer marker.
    std::size_t answer_line_start = input.rfind('\n', used_marker);
    answer_line_start = answer_line_start == std::string_view::npos ? 0 : answer_line_start + 1;
    if (marker != std::string_view::npos) {
        const std::size_t start = marker + std::string_view("analysis:").size();
        const std::size_t end = answer_line_start > start ? answer_line_start : input.size();
        analysis = clean_analysis(input.substr(start, end - start));
    } else {
        analysis = clean_analysis(input.substr(0, answer_line_start));
    }
    return AnswerOutcome{std::move(analysis), *answer, std::string(input)};
}

std::optional<Answer> normalize_answer(std::string_view s, const AnswerSpace& space) {
    auto a = find_candidate(s, space);
    if (!a && space.kind == AnswerSpace::Kind::Labels) {
        // gold labels are often bare lower-case letters
        auto t = text::trim(s);
        if (t.size() == 1 && t[0] >= 'a' && t[0] <= 'f') a = Answer::label(static_cast<char>(t[0] - 'a' + 'A'));
    }
    if (a && a->is_label() && !space.labels.contains(a->as_label())) return std::nullopt;
    return a;
}

}  // namespace refer
