#include "taskspec/text.hpp"

#include <algorithm>
#include <cctype>

namespace taskspec::text {

namespace {
bool is_space(unsigned char c) { return std::isspace(c) != 0; }
}  // namespace

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_ws = true;  // swallow leading whitespace
    for (unsigned char c : s) {
        if (is_space(c)) {
            if (!in_ws) out.push_back(' ');
            in_ws = true;
        } else {
            out.push_back(static_cast<char>(c));
            in_ws = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::string normalize_instruction(std::string_view s) {
    std::string out = collapse_whitespace(to_lower(s));
    while (!out.empty()) {
        char c = out.back();
        if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?') {
            out.pop_back();
        } else {
            break;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::vector<std::string> whitespace_tokens(std::string_view s) {
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        size_t start = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > start) tokens.emplace_back(s.substr(start, i - start));
    }
    return tokens;
}

size_t count_words(std::string_view s) { return whitespace_tokens(s).size(); }

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace taskspec::text
