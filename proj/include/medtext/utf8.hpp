#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace medtext::utf8 {

/// Decodes UTF-8 into Unicode scalar values. Throws ParseError on invalid
/// byte sequences; all annotation offsets in this library count scalar
/// values, so inputs must decode cleanly.
std::u32string decode(std::string_view text);

std::string encode(std::u32string_view text);
std::string encode(char32_t cp);

/// Number of scalar values in a UTF-8 string.
std::size_t length(std::string_view text);

/// Substring by character offsets [start, end).
std::string substr(std::string_view text, std::size_t start, std::size_t end);

/// ASCII + Latin-1 lowercasing over scalar values; other characters pass
/// through unchanged.
std::string to_lower(std::string_view text);
char32_t to_lower(char32_t cp);

bool is_upper(char32_t cp);
bool is_digit(char32_t cp);

}  // namespace medtext::utf8
