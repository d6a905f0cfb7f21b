#include "refer/json_io.hpp"

#include "refer/error.hpp"

namespace refer::json_io {

nlohmann::json to_json(const Rational& r) { return r.to_string(); }

Rational rational(const nlohmann::json& j, std::string_view what) {
    if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
    if (j.is_number()) return Rational::from_double(j.get<double>());
    if (j.is_string()) {
        if (auto r = Rational::parse(j.get<std::string>())) return *r;
    }
    throw Error(ErrorCode::SchemaViolation, std::string(what) + " is not a number: " + j.dump());
}

nlohmann::json to_json(const ScoreScale& s) {
    return {{"min", to_json(s.min)}, {"max", to_json(s.max)}, {"granularity", std::string(to_string(s.granularity))}};
}

ScoreScale scale(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("min") || !j.contains("max"))
        throw Error(ErrorCode::SchemaViolation, "scale needs min and max");
    ScoreScale s{rational(j.at("min"), "scale.min"), rational(j.at("max"), "scale.max"), Granularity::Integer};
    if (j.contains("granularity")) {
        auto g = parse_granularity(j.at("granularity").get<std::string>());
        if (!g) throw Error(ErrorCode::SchemaViolation, "scale.granularity must be integer or continuous");
        s.granularity = *g;
    }
    if (!(s.min < s.max)) throw Error(ErrorCode::SchemaViolation, "scale.min must be below scale.max");
    return s;
}

nlohmann::json to_json(const AnswerSpace& s) {
    if (s.kind == AnswerSpace::Kind::Number) return {{"kind", "number"}};
    nlohmann::json labels = nlohmann::json::array();
    for (char c : s.labels) labels.push_back(std::string(1, c));
    return {{"kind", "labels"}, {"labels", labels}};
}

AnswerSpace answer_space(const nlohmann::json& j) {
    const auto kind = get_string(j, "kind");
    if (kind == "number") return AnswerSpace::numeric();
    if (kind != "labels") throw Error(ErrorCode::SchemaViolation, "answer_space.kind must be labels or number");
    AnswerSpace s;
    if (!j.contains("labels") || !j.at("labels").is_array())
        throw Error(ErrorCode::SchemaViolation, "answer_space.labels missing");
    for (const auto& l : j.at("labels")) {
        auto str = l.get<std::string>();
        if (str.size() != 1 || str[0] < 'A' || str[0] > 'Z')
            throw Error(ErrorCode::SchemaViolation, "answer label must be one capital letter: " + str);
        s.labels.insert(str[0]);
    }
    if (s.labels.empty()) throw Error(ErrorCode::SchemaViolation, "answer_space.labels is empty");
    return s;
}

std::string get_string(const nlohmann::json& j, std::string_view key) {
    auto it = j.find(std::string(key));
    if (it == j.end() || !it->is_string())
        throw Error(ErrorCode::SchemaViolation, "missing string field '" + std::string(key) + "'");
    return it->get<std::string>();
}

std::string dump_line(const nlohmann::ordered_json& j) {
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

}  // namespace refer::json_io
