#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace medtext {

/// A word token. text equals the document substring at [start, end); offsets
/// count Unicode scalar values.
struct Token {
  std::string text;
  int64_t start = 0;
  int64_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::vector<Token> tokens;
  int64_t start = 0;
  int64_t end = 0;
};

/// Segments text by the default Unicode word-break rules and keeps segments
/// containing at least one letter, digit, or katakana character; whitespace
/// and standalone punctuation are discarded.
std::vector<Token> tokenize(std::string_view text);

/// Sentence boundaries fall after '.', '!', '?' followed by whitespace, and
/// at newlines. Ranges without any token are dropped. No abbreviation
/// handling: "Dr. Smith" splits after "Dr.".
std::vector<Sentence> split_sentences(std::string_view text);

/// True when the token range [tok.start, tok.end) intersects [start, end).
/// This is the rule used everywhere to project character-offset spans onto
/// tokens.
inline bool token_intersects(const Token& tok, int64_t start, int64_t end) {
  return tok.start < end && start < tok.end;
}

/// Word-break character classes enter the CRF shape feature too, so the
/// classifier is exposed here.
bool is_word_letter(char32_t cp);

}  // namespace medtext
