#include <doctest.h>

#include "medtext/errors.hpp"
#include "medtext/utf8.hpp"

using namespace medtext;

TEST_CASE("utf8 round-trip and length") {
  const std::string text = "caf\xc3\xa9 na\xc3\xafve \xe2\x82\xac" "5";  // café naïve €5
  const std::u32string chars = utf8::decode(text);
  CHECK(chars.size() == 13);
  CHECK(utf8::encode(chars) == text);
  CHECK(utf8::length(text) == 13);
}

TEST_CASE("utf8 substr counts characters, not bytes") {
  const std::string text = "caf\xc3\xa9 bar";
  CHECK(utf8::substr(text, 0, 4) == "caf\xc3\xa9");
  CHECK(utf8::substr(text, 5, 8) == "bar");
  CHECK(utf8::substr(text, 8, 8) == "");
  CHECK_THROWS_AS(utf8::substr(text, 0, 9), ValidationError);
}

TEST_CASE("invalid utf8 rejected") {
  CHECK_THROWS_AS(utf8::decode("\xff"), ParseError);
  CHECK_THROWS_AS(utf8::decode("\xc3"), ParseError);          // truncated
  CHECK_THROWS_AS(utf8::decode("\xc0\xaf"), ParseError);      // overlong
  CHECK_THROWS_AS(utf8::decode("\xed\xa0\x80"), ParseError);  // surrogate
}

TEST_CASE("lowercasing covers ascii and latin-1") {
  CHECK(utf8::to_lower("LIPITOR") == "lipitor");
  CHECK(utf8::to_lower("Caf\xc3\x89") == "caf\xc3\xa9");  // CafÉ -> café
  CHECK(utf8::to_lower("5-HTP!") == "5-htp!");
}
