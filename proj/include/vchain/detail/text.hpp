#pragma once

// Small ASCII/UTF-8 helpers shared by the parsers. Locale-independent on purpose:
// ids must not change with the environment.

#include <string>
#include <string_view>
#include <vector>

namespace vchain::detail {

constexpr bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

constexpr bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

constexpr char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

constexpr char ascii_upper(char c) { return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c; }

std::string ascii_upper(std::string_view s);

std::string_view trim(std::string_view s);

/// Trims and replaces every whitespace run by a single space.
std::string collapse_spaces(std::string_view s);

bool is_valid_utf8(std::string_view s);

/// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string_view> split_lines(std::string_view document);

std::vector<std::string_view> split(std::string_view s, char sep);

std::size_t edit_distance(std::string_view a, std::string_view b);

}  // namespace vchain::detail
