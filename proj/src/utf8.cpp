#include "medtext/utf8.hpp"

#include "medtext/errors.hpp"

namespace medtext::utf8 {

namespace {

// Decodes one scalar value starting at byte i; advances i past it.
char32_t decode_one(std::string_view s, std::size_t& i) {
  const auto byte = [&](std::size_t k) -> unsigned {
    return static_cast<unsigned char>(s[k]);
  };
  const unsigned b0 = byte(i);
  auto fail = [&]() -> char32_t {
    throw ParseError("invalid UTF-8 at byte " + std::to_string(i));
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int n;
  char32_t cp;
  if ((b0 & 0xE0) == 0xC0) {
    n = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    n = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    n = 3;
    cp = b0 & 0x07;
  } else {
    return fail();
  }
  if (i + static_cast<std::size_t>(n) >= s.size()) return fail();
  for (int k = 1; k <= n; ++k) {
    const unsigned bk = byte(i + k);
    if ((bk & 0xC0) != 0x80) return fail();
    cp = (cp << 6) | (bk & 0x3F);
  }
  // Reject overlong forms and surrogates.
  static constexpr char32_t kMin[4] = {0, 0x80, 0x800, 0x10000};
  if (cp < kMin[n] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return fail();
  i += n + 1;
  return cp;
}

}  // namespace

std::u32string decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) out.push_back(decode_one(text, i));
  return out;
}

std::string encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

std::string encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) out += encode(cp);
  return out;
}

std::size_t length(std::string_view text) {
  std::size_t n = 0, i = 0;
  while (i < text.size()) {
    decode_one(text, i);
    ++n;
  }
  return n;
}

std::string substr(std::string_view text, std::size_t start, std::size_t end) {
  std::size_t i = 0, chars = 0;
  std::size_t byte_start = text.size();
  while (i < text.size() && chars < end) {
    if (chars == start) byte_start = i;
    decode_one(text, i);
    ++chars;
  }
  if (chars == start) byte_start = i;  // start == length
  if (chars < end) throw ValidationError("substring end past end of text");
  return std::string(text.substr(byte_start, i - byte_start));
}

char32_t to_lower(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  // Latin-1 uppercase letters, excluding the multiplication sign.
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  // Latin Extended-A is mostly case-paired on even/odd codepoints.
  if (cp >= 0x100 && cp <= 0x177 && (cp % 2) == 0) return cp + 1;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 32;  // Greek
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;                 // Cyrillic
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  return cp;
}

std::string to_lower(std::string_view text) {
  std::u32string chars = decode(text);
  for (char32_t& cp : chars) cp = to_lower(cp);
  return encode(chars);
}

bool is_upper(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return true;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return true;
  if (cp >= 0x100 && cp <= 0x177 && (cp % 2) == 0) return true;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return true;
  if (cp >= 0x400 && cp <= 0x42F) return true;
  return false;
}

bool is_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

}  // namespace medtext::utf8
