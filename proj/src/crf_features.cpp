#include <algorithm>
#include <string>

#include "medtext/crf.hpp"
#include "medtext/utf8.hpp"

namespace medtext {

std::string word_shape(const std::string& token_text) {
  const std::u32string chars = utf8::decode(token_text);
  std::string shape;
  char last = 0;
  int run = 0;
  for (char32_t cp : chars) {
    char cls;
    if (utf8::is_upper(cp)) cls = 'X';
    else if (is_word_letter(cp)) cls = 'x';
    else if (utf8::is_digit(cp)) cls = 'd';
    else cls = 'p';
    run = (cls == last) ? run + 1 : 1;
    last = cls;
    if (run <= 2) shape.push_back(cls);
  }
  return shape;
}

std::vector<std::string> extract_feature_strings(const Sentence& sentence,
                                                 std::size_t position,
                                                 const CrfConfig& config) {
  std::vector<std::string> features;
  const auto n = static_cast<std::ptrdiff_t>(sentence.tokens.size());
  const auto pos = static_cast<std::ptrdiff_t>(position);

  // Surrounding words, keyed by offset. Positions past the sentence edge are
  // omitted, not padded.
  for (std::ptrdiff_t off = -config.window; off <= config.window; ++off) {
    const std::ptrdiff_t i = pos + off;
    if (i < 0 || i >= n) continue;
    features.push_back("w[" + std::to_string(off) + "]=" +
                       utf8::to_lower(sentence.tokens[i].text));
  }

  // Letter n-grams of the current token: every substring up to ngram_max
  // plus boundary-marked prefixes and suffixes.
  const std::u32string chars =
      utf8::decode(utf8::to_lower(sentence.tokens[position].text));
  const auto len = static_cast<std::ptrdiff_t>(chars.size());
  const std::u32string_view view(chars);
  for (std::ptrdiff_t glen = 1; glen <= config.ngram_max && glen <= len; ++glen) {
    for (std::ptrdiff_t i = 0; i + glen <= len; ++i)
      features.push_back("ng=" + utf8::encode(view.substr(i, glen)));
    features.push_back("ng=^" + utf8::encode(view.substr(0, glen)));
    features.push_back("ng=" + utf8::encode(view.substr(len - glen, glen)) + "$");
  }

  features.push_back("shape=" + word_shape(sentence.tokens[position].text));

  // Binary features: duplicates collapse.
  std::sort(features.begin(), features.end());
  features.erase(std::unique(features.begin(), features.end()), features.end());
  return features;
}

}  // namespace medtext
