#include "coco/codelex.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

namespace coco {
namespace {

bool is_ascii_alpha(unsigned char c) { return std::isalpha(c) != 0; }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_space(unsigned char c) { return std::isspace(c) != 0; }

bool is_ident_start(unsigned char c) {
  return is_ascii_alpha(c) || c == '_' || c == '$' || c >= 0x80;
}

bool is_ident_part(unsigned char c) { return is_ident_start(c) || is_digit(c); }

const std::unordered_set<std::string_view>& java_keywords() {
  static const std::unordered_set<std::string_view> kKeywords = {
      "abstract", "assert",     "boolean",   "break",     "byte",
      "case",     "catch",      "char",      "class",     "const",
      "continue", "default",    "do",        "double",    "else",
      "enum",     "extends",    "final",     "finally",   "float",
      "for",      "goto",       "if",        "implements", "import",
      "instanceof", "int",      "interface", "long",      "native",
      "new",      "package",    "private",   "protected", "public",
      "return",   "short",      "static",    "strictfp",  "super",
      "switch",   "synchronized", "this",    "throw",     "throws",
      "transient", "try",       "void",      "volatile",  "while",
      "var",      "yield",      "record"};
  return kKeywords;
}

// Longest first so maximal munch works with a linear scan.
constexpr std::array<std::string_view, 25> kMultiCharOps = {
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--",
    "&&",   "||",  "==",  "!=",  "<=",  ">=", "+=", "-=", "*=",
    "/=",   "%=",  "&=",  "|=",  "^=",  "<<", ">>"};

bool is_punctuation_text(std::string_view text) {
  static const std::unordered_set<std::string_view> kPunct = {
      "(", ")", "{", "}", "[", "]", ";", ",", ".", "...", "@", "::"};
  return kPunct.contains(text);
}

std::size_t scan_quoted(std::string_view src, std::size_t start, char quote,
                        const char* what) {
  std::size_t i = start + 1;
  while (i < src.size()) {
    const char c = src[i];
    if (c == '\\') {
      i += 2;
      continue;
    }
    if (c == '\n') break;
    if (c == quote) return i + 1;
    ++i;
  }
  throw LexError(start, std::string("unterminated ") + what);
}

std::size_t scan_text_block(std::string_view src, std::size_t start) {
  std::size_t i = start + 3;
  while (i + 2 < src.size()) {
    if (src[i] == '\\') {
      i += 2;
      continue;
    }
    if (src.compare(i, 3, "\"\"\"") == 0) return i + 3;
    ++i;
  }
  throw LexError(start, "unterminated text block");
}

std::size_t scan_number(std::string_view src, std::size_t start) {
  std::size_t i = start;
  const bool hex = src.size() > start + 1 && src[start] == '0' &&
                   (src[start + 1] == 'x' || src[start + 1] == 'X');
  while (i < src.size()) {
    const auto c = static_cast<unsigned char>(src[i]);
    if (std::isalnum(c) || c == '_' || c == '.') {
      // "1..2" is not a number; stop before a second dot run.
      if (c == '.' && i + 1 < src.size() && src[i + 1] == '.') break;
      ++i;
      continue;
    }
    if ((c == '+' || c == '-') && i > start) {
      const char prev = src[i - 1];
      const bool exponent =
          hex ? (prev == 'p' || prev == 'P') : (prev == 'e' || prev == 'E');
      if (exponent) {
        ++i;
        continue;
      }
    }
    break;
  }
  return i;
}

}  // namespace

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::kIdentifier: return "identifier";
    case TokenKind::kKeyword: return "keyword";
    case TokenKind::kLiteral: return "literal";
    case TokenKind::kOperator: return "operator";
    case TokenKind::kPunctuation: return "punctuation";
    case TokenKind::kCommentWord: return "comment-word";
    case TokenKind::kTag: return "tag";
    case TokenKind::kMarker: return "marker";
  }
  return "unknown";
}

TokenStream lex_code(std::string_view src) {
  TokenStream out;
  std::size_t i = 0;
  const std::size_t n = src.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(src[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      const auto end = src.find("*/", i + 2);
      if (end == std::string_view::npos)
        throw LexError(i, "unterminated block comment");
      i = end + 2;
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t j = i + 1;
      while (j < n && is_ident_part(static_cast<unsigned char>(src[j]))) ++j;
      std::string text(src.substr(i, j - i));
      TokenKind kind = TokenKind::kIdentifier;
      if (text == "true" || text == "false" || text == "null")
        kind = TokenKind::kLiteral;
      else if (java_keywords().contains(text))
        kind = TokenKind::kKeyword;
      out.push_back({std::move(text), kind});
      i = j;
      continue;
    }
    if (is_digit(c) ||
        (c == '.' && i + 1 < n && is_digit(static_cast<unsigned char>(src[i + 1])))) {
      const std::size_t j = scan_number(src, i);
      out.push_back({std::string(src.substr(i, j - i)), TokenKind::kLiteral});
      i = j;
      continue;
    }
    if (c == '"') {
      const std::size_t j = src.compare(i, 3, "\"\"\"") == 0
                                ? scan_text_block(src, i)
                                : scan_quoted(src, i, '"', "string literal");
      out.push_back({std::string(src.substr(i, j - i)), TokenKind::kLiteral});
      i = j;
      continue;
    }
    if (c == '\'') {
      const std::size_t j = scan_quoted(src, i, '\'', "char literal");
      out.push_back({std::string(src.substr(i, j - i)), TokenKind::kLiteral});
      i = j;
      continue;
    }
    std::string_view op;
    for (const auto candidate : kMultiCharOps) {
      if (src.compare(i, candidate.size(), candidate) == 0) {
        op = candidate;
        break;
      }
    }
    if (op.empty()) op = src.substr(i, 1);
    out.push_back({std::string(op), is_punctuation_text(op)
                                        ? TokenKind::kPunctuation
                                        : TokenKind::kOperator});
    i += op.size();
  }
  return out;
}

TokenStream lex_comment(std::string_view comment) {
  TokenStream out;
  auto is_punct = [](unsigned char ch) { return ch < 0x80 && std::ispunct(ch); };
  std::size_t i = 0;
  const std::size_t n = comment.size();
  while (i < n) {
    while (i < n && is_space(static_cast<unsigned char>(comment[i]))) ++i;
    if (i >= n) break;
    std::size_t j = i;
    while (j < n && !is_space(static_cast<unsigned char>(comment[j]))) ++j;
    std::string_view word = comment.substr(i, j - i);
    i = j;

    std::size_t lo = 0;
    std::size_t hi = word.size();
    while (lo < hi && is_punct(static_cast<unsigned char>(word[lo]))) {
      const bool tag_start =
          word[lo] == '@' && lo + 1 < hi &&
          std::isalnum(static_cast<unsigned char>(word[lo + 1]));
      if (tag_start) break;
      out.push_back({std::string(1, word[lo]), TokenKind::kPunctuation});
      ++lo;
    }
    std::vector<Token> trailing;
    while (hi > lo && is_punct(static_cast<unsigned char>(word[hi - 1]))) {
      trailing.push_back({std::string(1, word[hi - 1]), TokenKind::kPunctuation});
      --hi;
    }
    if (hi > lo) {
      std::string core(word.substr(lo, hi - lo));
      const TokenKind kind =
          core.size() > 1 && core[0] == '@' ? TokenKind::kTag : TokenKind::kCommentWord;
      out.push_back({std::move(core), kind});
    }
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
  }
  return out;
}

std::vector<std::string> split_subtokens(std::string_view token) {
  auto alnum = [](unsigned char ch) {
    return std::isalnum(ch) != 0 || ch >= 0x80;
  };
  const bool any = std::any_of(token.begin(), token.end(), [&](char ch) {
    return alnum(static_cast<unsigned char>(ch));
  });
  if (!any) return {std::string(token)};

  auto is_upper = [](unsigned char ch) { return ch >= 'A' && ch <= 'Z'; };
  auto is_lower = [](unsigned char ch) { return (ch >= 'a' && ch <= 'z') || ch >= 0x80; };

  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  };
  for (std::size_t k = 0; k < token.size(); ++k) {
    const auto ch = static_cast<unsigned char>(token[k]);
    if (!alnum(ch)) {
      flush();
      continue;
    }
    if (!current.empty()) {
      const auto prev = static_cast<unsigned char>(token[k - 1]);
      bool boundary = false;
      if (is_digit(ch) != is_digit(prev)) boundary = true;
      else if (is_upper(ch) && is_lower(prev)) boundary = true;
      else if (is_upper(ch) && is_upper(prev) && k + 1 < token.size() &&
               is_lower(static_cast<unsigned char>(token[k + 1])))
        boundary = true;  // "HTTPServer": split before the 'S'
      if (boundary) flush();
    }
    current.push_back(static_cast<char>(ch < 0x80 ? std::tolower(ch) : ch));
  }
  flush();
  return out;
}

std::vector<std::string> subtokenize(const TokenStream& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size() * 2);
  for (const auto& tok : tokens) {
    switch (tok.kind) {
      case TokenKind::kIdentifier:
      case TokenKind::kKeyword:
      case TokenKind::kCommentWord: {
        auto parts = split_subtokens(tok.text);
        out.insert(out.end(), std::make_move_iterator(parts.begin()),
                   std::make_move_iterator(parts.end()));
        break;
      }
      case TokenKind::kLiteral: {
        std::size_t i = 0;
        while (i < tok.text.size()) {
          while (i < tok.text.size() && is_space(static_cast<unsigned char>(tok.text[i]))) ++i;
          std::size_t j = i;
          while (j < tok.text.size() && !is_space(static_cast<unsigned char>(tok.text[j]))) ++j;
          if (j > i) out.push_back(tok.text.substr(i, j - i));
          i = j;
        }
        break;
      }
      default:
        out.push_back(tok.text);
    }
  }
  return out;
}

std::vector<std::string> texts(const TokenStream& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

}  // namespace coco
