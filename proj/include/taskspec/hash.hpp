#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace taskspec::hash {

// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);

// Hash of a field tuple. Each field is prefixed with its u64-LE byte
// length before concatenation, so ("ab","c") and ("a","bc") differ.
std::string content_hash(std::initializer_list<std::string_view> fields);
std::string content_hash(const std::vector<std::string>& fields);

}  // namespace taskspec::hash
