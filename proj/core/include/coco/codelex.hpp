#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "coco/error.hpp"

namespace coco {

enum class TokenKind {
  kIdentifier,
  kKeyword,
  kLiteral,
  kOperator,
  kPunctuation,
  kCommentWord,
  kTag,
  kMarker,  // edit-sequence marker, only produced by editseq
};

std::string_view to_string(TokenKind kind);

struct Token {
  std::string text;
  TokenKind kind;

  friend bool operator==(const Token&, const Token&) = default;
};

using TokenStream = std::vector<Token>;

// Thrown on an unterminated string/char literal or block comment.
class LexError : public Error {
 public:
  LexError(std::size_t offset, const std::string& what)
      : Error(what + " at byte offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Tokenizes a Java-like method. Comments inside the method are dropped;
// string, text-block and char literals are kept whole.
TokenStream lex_code(std::string_view source);

// Whitespace-split comment words with leading/trailing punctuation detached.
// Block tags such as "@return" become kTag tokens.
TokenStream lex_comment(std::string_view comment);

// Splits an identifier at camelCase, PascalCase, acronym, underscore and
// letter/digit boundaries and lowercases every piece. Tokens without any
// letter or digit come back unchanged as a single piece.
std::vector<std::string> split_subtokens(std::string_view token);

// The pre-subword sequence used for vocabularies, lengths and packing:
// identifiers, keywords and comment words go through split_subtokens,
// string literals are split on whitespace, everything else is kept.
std::vector<std::string> subtokenize(const TokenStream& tokens);

std::vector<std::string> texts(const TokenStream& tokens);

}  // namespace coco
