#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace refer::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string_view> split_lines(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Lower-cases and maps '_' to ' ' so "Caption_Quality" matches "caption quality".
std::string fold_key(std::string_view s);

/// Removes leading list bullets, heading hashes and markdown emphasis.
std::string_view strip_decoration(std::string_view line);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

}  // namespace refer::text
