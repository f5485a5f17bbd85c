#include "medtext/tokenizer.hpp"

#include <algorithm>

#include "medtext/utf8.hpp"

namespace medtext {

namespace {

// Word_Break property values from UAX #29 (default, untailored). The
// classifier below covers the scripts that occur in consumer forum text:
// Latin, Greek, Cyrillic, Hebrew, Arabic, plus common digits, combining
// marks and format controls. Unlisted characters fall through to Other and
// break on both sides.
enum class WB {
  Other,
  CR,
  LF,
  Newline,
  Extend,
  ZWJ,
  Format,
  WSegSpace,
  ALetter,
  MidLetter,
  MidNum,
  MidNumLet,
  SingleQuote,
  DoubleQuote,
  Numeric,
  Katakana,
  ExtendNumLet,
  RegionalIndicator,
};

bool in_any(char32_t cp, std::initializer_list<std::pair<char32_t, char32_t>> ranges) {
  for (const auto& [lo, hi] : ranges)
    if (cp >= lo && cp <= hi) return true;
  return false;
}

bool is_aletter(char32_t cp) {
  if ((cp >= U'A' && cp <= U'Z') || (cp >= U'a' && cp <= U'z')) return true;
  return in_any(cp, {
      {0x00AA, 0x00AA}, {0x00B5, 0x00B5}, {0x00BA, 0x00BA},
      {0x00C0, 0x00D6}, {0x00D8, 0x00F6}, {0x00F8, 0x02C1},  // Latin-1 + ext
      {0x0370, 0x0374}, {0x0376, 0x0377}, {0x037A, 0x037D},
      {0x037F, 0x037F}, {0x0386, 0x0386}, {0x0388, 0x03FF},  // Greek
      {0x0400, 0x0481}, {0x048A, 0x052F},                    // Cyrillic
      {0x0531, 0x0556}, {0x0560, 0x0588},                    // Armenian
      {0x05D0, 0x05EA}, {0x05EF, 0x05F2},                    // Hebrew
      {0x0620, 0x064A}, {0x066E, 0x066F}, {0x0671, 0x06D3},  // Arabic
      {0x06FA, 0x06FC}, {0x0750, 0x077F},
      {0x1E00, 0x1FFF},                                      // Latin/Greek ext
      {0x2C60, 0x2C7F}, {0xA720, 0xA7FF},                    // Latin ext C/D
      {0xFF21, 0xFF3A}, {0xFF41, 0xFF5A},                    // fullwidth Latin
  });
}

WB word_break_property(char32_t cp) {
  switch (cp) {
    case 0x000D: return WB::CR;
    case 0x000A: return WB::LF;
    case 0x000B:
    case 0x000C:
    case 0x0085:
    case 0x2028:
    case 0x2029: return WB::Newline;
    case 0x200D: return WB::ZWJ;
    case 0x0027: return WB::SingleQuote;
    case 0x0022: return WB::DoubleQuote;
    case 0x003A:
    case 0x00B7:
    case 0x0387:
    case 0x05F4:
    case 0x2027:
    case 0xFE13:
    case 0xFE55:
    case 0xFF1A: return WB::MidLetter;
    case 0x002C:
    case 0x003B:
    case 0x037E:
    case 0x0589:
    case 0x060C:
    case 0x060D:
    case 0x066C:
    case 0x07F8:
    case 0x2044:
    case 0xFE10:
    case 0xFE14:
    case 0xFE50:
    case 0xFE54:
    case 0xFF0C:
    case 0xFF1B: return WB::MidNum;
    case 0x002E:
    case 0x2018:
    case 0x2019:
    case 0x2024:
    case 0xFE52:
    case 0xFF07:
    case 0xFF0E: return WB::MidNumLet;
    default: break;
  }
  if (cp == 0x0020 || cp == 0x1680 || (cp >= 0x2000 && cp <= 0x2006) ||
      (cp >= 0x2008 && cp <= 0x200A) || cp == 0x205F || cp == 0x3000)
    return WB::WSegSpace;
  if (in_any(cp, {{0x0300, 0x036F}, {0x0483, 0x0489}, {0x0591, 0x05BD},
                  {0x05BF, 0x05BF}, {0x05C1, 0x05C2}, {0x05C4, 0x05C5},
                  {0x05C7, 0x05C7}, {0x0610, 0x061A}, {0x064B, 0x065F},
                  {0x0670, 0x0670}, {0x06D6, 0x06DC}, {0x06DF, 0x06E4},
                  {0x1AB0, 0x1AFF}, {0x1DC0, 0x1DFF}, {0x200C, 0x200C},
                  {0x20D0, 0x20F0}, {0xFE00, 0xFE0F}, {0xFE20, 0xFE2F}}))
    return WB::Extend;
  if (cp == 0x00AD || cp == 0x061C || (cp >= 0x200E && cp <= 0x200F) ||
      (cp >= 0x202A && cp <= 0x202E) || (cp >= 0x2060 && cp <= 0x2064) ||
      cp == 0xFEFF)
    return WB::Format;
  if (utf8::is_digit(cp) ||
      in_any(cp, {{0x0660, 0x0669}, {0x06F0, 0x06F9}, {0x0966, 0x096F},
                  {0xFF10, 0xFF19}}))
    return WB::Numeric;
  if (cp == 0x005F || cp == 0x203F || cp == 0x2040 || cp == 0x2054 ||
      (cp >= 0xFE33 && cp <= 0xFE34) || (cp >= 0xFE4D && cp <= 0xFE4F) ||
      cp == 0xFF3F)
    return WB::ExtendNumLet;
  if (in_any(cp, {{0x30A1, 0x30FA}, {0x30FC, 0x30FF}, {0x31F0, 0x31FF},
                  {0xFF66, 0xFF9D}}))
    return WB::Katakana;
  if (cp >= 0x1F1E6 && cp <= 0x1F1FF) return WB::RegionalIndicator;
  if (is_aletter(cp)) return WB::ALetter;
  return WB::Other;
}

bool is_ahletter(WB p) { return p == WB::ALetter; }
bool is_mid_letter_like(WB p) {
  return p == WB::MidLetter || p == WB::MidNumLet || p == WB::SingleQuote;
}
bool is_mid_num_like(WB p) {
  return p == WB::MidNum || p == WB::MidNumLet || p == WB::SingleQuote;
}
bool is_skip(WB p) { return p == WB::Extend || p == WB::Format || p == WB::ZWJ; }
bool is_newline(WB p) { return p == WB::CR || p == WB::LF || p == WB::Newline; }

// Computes word boundaries per UAX #29 WB1-WB16 (emoji rules excluded).
// boundary[i] is true when a break occurs before position i.
std::vector<bool> word_boundaries(const std::u32string& text,
                                  const std::vector<WB>& prop) {
  const std::size_t n = text.size();
  std::vector<bool> boundary(n + 1, false);
  boundary[0] = boundary[n] = true;  // WB1, WB2

  // prev_sig[i]: index of the last non-skip character before i, or -1.
  std::vector<std::ptrdiff_t> prev_sig(n + 1, -1);
  for (std::size_t i = 1; i <= n; ++i)
    prev_sig[i] = is_skip(prop[i - 1]) ? prev_sig[i - 1] : static_cast<std::ptrdiff_t>(i - 1);

  // next_sig[i]: index of the first non-skip character at or after i, or n.
  std::vector<std::size_t> next_sig(n + 1, n);
  for (std::size_t i = n; i-- > 0;)
    next_sig[i] = is_skip(prop[i]) ? next_sig[i + 1] : i;

  // Count of regional-indicator characters in the maximal run ending before
  // i, for WB15/16 pairing.
  std::vector<int> ri_run(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i)
    ri_run[i] = (prop[i - 1] == WB::RegionalIndicator) ? ri_run[i - 1] + 1 : 0;

  for (std::size_t i = 1; i < n; ++i) {
    const WB before = prop[i - 1];
    const WB after = prop[i];

    if (before == WB::CR && after == WB::LF) continue;  // WB3
    if (is_newline(before) || is_newline(after)) {      // WB3a, WB3b
      boundary[i] = true;
      continue;
    }
    if (before == WB::WSegSpace && after == WB::WSegSpace) continue;  // WB3d
    if (is_skip(after)) continue;                                     // WB4

    const std::ptrdiff_t li = prev_sig[i];
    const WB l = (li >= 0) ? prop[li] : WB::Other;
    const bool have_l = li >= 0 && !is_skip(prop[li]);
    const WB r = after;

    if (!have_l) {
      boundary[i] = true;  // nothing significant on the left: WB999
      continue;
    }

    // Lookahead/lookbehind with skips for the two-context rules.
    const std::size_t rr_i = next_sig[i + 1 <= n ? i + 1 : n];
    const WB rr = (rr_i < n) ? prop[rr_i] : WB::Other;
    const std::ptrdiff_t lli = (li > 0) ? prev_sig[li] : -1;
    const WB ll = (lli >= 0) ? prop[lli] : WB::Other;

    bool brk = true;
    if (is_ahletter(l) && is_ahletter(r)) brk = false;                       // WB5
    else if (is_ahletter(l) && is_mid_letter_like(r) && is_ahletter(rr)) brk = false;  // WB6
    else if (is_mid_letter_like(l) && is_ahletter(r) && is_ahletter(ll)) brk = false;  // WB7
    else if (l == WB::Numeric && r == WB::Numeric) brk = false;              // WB8
    else if (is_ahletter(l) && r == WB::Numeric) brk = false;                // WB9
    else if (l == WB::Numeric && is_ahletter(r)) brk = false;                // WB10
    else if (is_mid_num_like(l) && r == WB::Numeric && ll == WB::Numeric) brk = false;  // WB11
    else if (l == WB::Numeric && is_mid_num_like(r) && rr == WB::Numeric) brk = false;  // WB12
    else if (l == WB::Katakana && r == WB::Katakana) brk = false;            // WB13
    else if ((is_ahletter(l) || l == WB::Numeric || l == WB::Katakana ||
              l == WB::ExtendNumLet) && r == WB::ExtendNumLet)
      brk = false;                                                           // WB13a
    else if (l == WB::ExtendNumLet &&
             (is_ahletter(r) || r == WB::Numeric || r == WB::Katakana))
      brk = false;                                                           // WB13b
    else if (l == WB::RegionalIndicator && r == WB::RegionalIndicator &&
             (ri_run[li + 1] % 2) == 1)
      brk = false;                                                           // WB15/16
    boundary[i] = brk;
  }
  return boundary;
}

bool is_word_segment(const std::u32string& text, const std::vector<WB>& prop,
                     std::size_t start, std::size_t end) {
  for (std::size_t i = start; i < end; ++i) {
    const WB p = prop[i];
    if (p == WB::ALetter || p == WB::Numeric || p == WB::Katakana) return true;
  }
  (void)text;
  return false;
}

bool is_sentence_whitespace(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\r' || cp == U'\n' ||
         cp == 0x0B || cp == 0x0C || cp == 0x85 || cp == 0x1680 ||
         (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 ||
         cp == 0x205F || cp == 0x3000;
}

bool is_hard_newline(char32_t cp) {
  return cp == U'\n' || cp == U'\r' || cp == 0x0B || cp == 0x0C ||
         cp == 0x85 || cp == 0x2028 || cp == 0x2029;
}

}  // namespace

bool is_word_letter(char32_t cp) { return is_aletter(cp); }

std::vector<Token> tokenize(std::string_view text) {
  const std::u32string chars = utf8::decode(text);
  std::vector<WB> prop(chars.size());
  for (std::size_t i = 0; i < chars.size(); ++i)
    prop[i] = word_break_property(chars[i]);

  const std::vector<bool> boundary = word_boundaries(chars, prop);

  std::vector<Token> tokens;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= chars.size(); ++i) {
    if (!boundary[i]) continue;
    if (is_word_segment(chars, prop, start, i)) {
      tokens.push_back(Token{utf8::encode(std::u32string_view(chars).substr(start, i - start)),
                             static_cast<int64_t>(start), static_cast<int64_t>(i)});
    }
    start = i;
  }
  return tokens;
}

std::vector<Sentence> split_sentences(std::string_view text) {
  const std::u32string chars = utf8::decode(text);

  // Sentence ranges over the raw character stream.
  std::vector<std::pair<int64_t, int64_t>> ranges;
  std::size_t start = 0;
  for (std::size_t i = 0; i < chars.size(); ++i) {
    const char32_t c = chars[i];
    const bool terminal =
        (c == U'.' || c == U'!' || c == U'?') &&
        (i + 1 < chars.size() && is_sentence_whitespace(chars[i + 1]));
    if (terminal) {
      ranges.emplace_back(start, i + 1);
      start = i + 1;
    } else if (is_hard_newline(c)) {
      if (i > start) ranges.emplace_back(start, i);
      start = i + 1;
    }
  }
  if (chars.size() > start) ranges.emplace_back(start, chars.size());

  std::vector<Token> tokens = tokenize(text);

  std::vector<Sentence> sentences;
  std::size_t t = 0;
  for (const auto& [rs, re] : ranges) {
    Sentence s;
    s.start = rs;
    s.end = re;
    while (t < tokens.size() && tokens[t].start < re) {
      s.tokens.push_back(tokens[t]);
      ++t;
    }
    if (!s.tokens.empty()) {
      // Tokens never straddle a boundary, but keep the range tight anyway.
      s.end = std::max(s.end, s.tokens.back().end);
      sentences.push_back(std::move(s));
    }
  }
  // Trailing tokens past the last range cannot occur; ranges cover the text.
  return sentences;
}

}  // namespace medtext
