#include <doctest.h>

#include <random>

#include "coco/codelex.hpp"

using namespace coco;

namespace {
std::vector<std::string> lex(const std::string& s) { return texts(lex_code(s)); }
std::vector<std::string> words(const std::string& s) { return texts(lex_comment(s)); }
using V = std::vector<std::string>;
}  // namespace

TEST_CASE("lex_code splits fragments into tokens") {
  CHECK(lex("return x;") == V{"return", "x", ";"});
  CHECK(lex("a+b") == V{"a", "+", "b"});
  CHECK(lex("setMaxCount(n)") == V{"setMaxCount", "(", "n", ")"});
}

TEST_CASE("lex_code token kinds") {
  const auto t = lex_code("return x + 1;");
  REQUIRE(t.size() == 5);
  CHECK(t[0].kind == TokenKind::kKeyword);
  CHECK(t[1].kind == TokenKind::kIdentifier);
  CHECK(t[2].kind == TokenKind::kOperator);
  CHECK(t[3].kind == TokenKind::kLiteral);
  CHECK(t[4].kind == TokenKind::kPunctuation);
}

TEST_CASE("lex_code keeps literals whole and drops comments") {
  CHECK(lex("s = \"a b;c\"; // tail") == V{"s", "=", "\"a b;c\"", ";"});
  CHECK(lex("c = '\\''; /* x */ d") == V{"c", "=", "'\\''", ";", "d"});
  CHECK(lex("a >>>= b") == V{"a", ">>>=", "b"});
}

TEST_CASE("lex_code reports unterminated literals with an offset") {
  try {
    lex_code("x = \"abc");
    FAIL("expected LexError");
  } catch (const LexError& e) {
    CHECK(e.offset() == 4);
  }
  CHECK_THROWS_AS(lex_code("a /* open"), LexError);
  CHECK_THROWS_AS(lex_code("c = 'x"), LexError);
}

TEST_CASE("split_subtokens boundary rules") {
  CHECK(split_subtokens("setMaxCount") == V{"set", "max", "count"});
  CHECK(split_subtokens("x") == V{"x"});
  CHECK(split_subtokens("HTTP2Server") == V{"http", "2", "server"});
  CHECK(split_subtokens("MAX_VALUE") == V{"max", "value"});
  CHECK(split_subtokens("getURLFor") == V{"get", "url", "for"});
  CHECK(split_subtokens(";") == V{";"});
}

TEST_CASE("lex_comment detaches punctuation and tags") {
  CHECK(words("@return the id") == V{"@return", "the", "id"});
  CHECK(words("").empty());
  CHECK(words("id, or null") == V{"id", ",", "or", "null"});
  const auto t = lex_comment("@param n the count");
  REQUIRE(!t.empty());
  CHECK(t[0].kind == TokenKind::kTag);
}

TEST_CASE("subtokenize lowercases identifiers and keeps operators") {
  CHECK(subtokenize(lex_code("int maxCount = a+b;")) ==
        V{"int", "max", "count", "=", "a", "+", "b", ";"});
}

TEST_CASE("property: concatenated token texts equal the input without whitespace") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> parts = {"foo", "Bar", "x1", "+", "-", "(", ")", "{", "}",
                                          ";", "==", "1.5", "0x1F", "return", " ", "\n", "\t"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string src, squeezed;
    const int n = std::uniform_int_distribution<int>(0, 20)(rng);
    for (int k = 0; k < n; ++k) {
      // Always separate so adjacent pieces cannot fuse into a new token.
      const auto& p = parts[std::uniform_int_distribution<std::size_t>(0, parts.size() - 1)(rng)];
      src += p + " ";
      for (char ch : p)
        if (!std::isspace(static_cast<unsigned char>(ch))) squeezed += ch;
    }
    std::string joined;
    for (const auto& t : lex(src)) joined += t;
    CHECK(joined == squeezed);
  }
}
