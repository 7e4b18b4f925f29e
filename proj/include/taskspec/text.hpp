#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace taskspec::text {

// Strip leading/trailing ASCII whitespace.
std::string trim(std::string_view s);

std::string to_lower(std::string_view s);

// Collapse any run of whitespace to a single space, trimming the ends.
std::string collapse_whitespace(std::string_view s);

// Canonical form used for instruction equality checks: lowercase,
// collapsed whitespace, trailing punctuation stripped.
std::string normalize_instruction(std::string_view s);

// Split on runs of whitespace. "a  b\nc" -> {"a","b","c"}.
std::vector<std::string> whitespace_tokens(std::string_view s);

size_t count_words(std::string_view s);

// FNV-1a 64-bit. Stable across platforms and runs.
uint64_t fnv1a64(std::string_view s);

}  // namespace taskspec::text
