#include "refer/text.hpp"

#include <algorithm>
#include <cctype>

namespace refer::text {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string_view> split_lines(std::string_view s) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto nl = s.find('\n', start);
        auto end = nl == std::string_view::npos ? s.size() : nl;
        auto line = s.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return lines;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string fold_key(std::string_view s) {
    std::string out = to_lower(trim(s));
    std::replace(out.begin(), out.end(), '_', ' ');
    return out;
}

std::string_view strip_decoration(std::string_view line) {
    line = trim(line);
    bool changed = true;
    while (changed && !line.empty()) {
        changed = false;
        const char c = line.front();
        const bool bullet_dash = c == '-' && line.size() > 1 && std::isspace(static_cast<unsigned char>(line[1]));
        if (bullet_dash || c == '*' || c == '#' || c == '>' || c == '_') {
            line.remove_prefix(1);
            line = trim(line);
            changed = true;
        } else if (line.substr(0, 3) == "\xE2\x80\xA2") {  // U+2022 bullet
            line.remove_prefix(3);
            line = trim(line);
            changed = true;
        }
    }
    return line;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    if (from.empty()) return s;
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

}  // namespace refer::text
