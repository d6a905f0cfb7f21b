#pragma once

#include <string_view>

#include <nlohmann/json.hpp>

#include "refer/types.hpp"

namespace refer::json_io {

/// Rationals are written as exact strings ("2.5", "8/3").
nlohmann::json to_json(const Rational& r);
/// Accepts JSON numbers (read through their shortest decimal form) or strings.
Rational rational(const nlohmann::json& j, std::string_view what);

nlohmann::json to_json(const ScoreScale& s);
ScoreScale scale(const nlohmann::json& j);

nlohmann::json to_json(const AnswerSpace& s);
AnswerSpace answer_space(const nlohmann::json& j);

/// Required string member; throws Error{SchemaViolation} naming the key.
std::string get_string(const nlohmann::json& j, std::string_view key);

/// Writes keys in insertion order, no spaces: the canonical on-disk form.
std::string dump_line(const nlohmann::ordered_json& j);

}  // namespace refer::json_io
