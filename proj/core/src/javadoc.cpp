#include "coco/javadoc.hpp"

#include <cctype>

namespace coco {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_ident(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$' ||
         static_cast<unsigned char>(c) >= 0x80;
}

std::string collapse(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

// Index just past a string, char, text block or comment starting at i, or i
// when nothing of the sort starts there.
std::size_t skip_opaque(std::string_view src, std::size_t i) {
  if (src.compare(i, 2, "//") == 0) {
    const auto nl = src.find('\n', i);
    return nl == std::string_view::npos ? src.size() : nl + 1;
  }
  if (src.compare(i, 2, "/*") == 0) {
    const auto end = src.find("*/", i + 2);
    if (end == std::string_view::npos)
      throw ParseError("unterminated comment at byte offset " + std::to_string(i));
    return end + 2;
  }
  if (src.compare(i, 3, "\"\"\"") == 0) {
    const auto end = src.find("\"\"\"", i + 3);
    if (end == std::string_view::npos)
      throw ParseError("unterminated text block at byte offset " + std::to_string(i));
    return end + 3;
  }
  if (src[i] == '"' || src[i] == '\'') {
    const char q = src[i];
    for (std::size_t j = i + 1; j < src.size(); ++j) {
      if (src[j] == '\\') {
        ++j;
      } else if (src[j] == q) {
        return j + 1;
      } else if (src[j] == '\n') {
        break;
      }
    }
    throw ParseError("unterminated literal at byte offset " + std::to_string(i));
  }
  return i;
}

bool has_word(std::string_view text, std::string_view word) {
  for (std::size_t pos = text.find(word); pos != std::string_view::npos;
       pos = text.find(word, pos + 1)) {
    const bool left = pos == 0 || !is_ident(text[pos - 1]);
    const bool right = pos + word.size() >= text.size() || !is_ident(text[pos + word.size()]);
    if (left && right) return true;
  }
  return false;
}

// Matches the brace at `open`; returns the index of its partner.
std::size_t match_brace(std::string_view src, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < src.size();) {
    const std::size_t j = skip_opaque(src, i);
    if (j != i) {
      i = j;
      continue;
    }
    if (src[i] == '{') ++depth;
    if (src[i] == '}' && --depth == 0) return i;
    ++i;
  }
  throw ParseError("unbalanced braces from byte offset " + std::to_string(open));
}

}  // namespace

std::vector<DocComment::Section> DocComment::sections() const {
  std::vector<Section> out;
  if (!summary.empty()) out.push_back({Category::kSummary, "", summary});
  if (returns) out.push_back({Category::kReturn, "", *returns});
  for (const auto& [name, text] : params) out.push_back({Category::kParam, name, text});
  return out;
}

DocComment parse_doc_comment(std::string_view raw) {
  std::string_view s = raw;
  if (s.starts_with("/**")) s.remove_prefix(3);
  if (s.ends_with("*/")) s.remove_suffix(2);

  std::vector<std::string> blocks(1);
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find('\n', start);
    if (end == std::string_view::npos) end = s.size();
    std::string_view line = s.substr(start, end - start);
    while (!line.empty() && is_space(line.front())) line.remove_prefix(1);
    while (line.starts_with("*")) line.remove_prefix(1);
    while (!line.empty() && is_space(line.front())) line.remove_prefix(1);
    if (line.starts_with("@")) blocks.emplace_back();
    blocks.back().append(line).push_back(' ');
    start = end + 1;
  }

  DocComment doc;
  doc.summary = collapse(blocks.front());
  for (std::size_t k = 1; k < blocks.size(); ++k) {
    std::string text = collapse(blocks[k]);
    if (text.starts_with("@return") && (text.size() == 7 || text[7] == ' ')) {
      if (!doc.returns) doc.returns = text;
    } else if (text.starts_with("@param ")) {
      auto name_end = text.find(' ', 7);
      std::string name = text.substr(7, name_end == std::string::npos ? std::string::npos
                                                                       : name_end - 7);
      doc.params.emplace_back(std::move(name), std::move(text));
    }
  }
  return doc;
}

std::vector<DocumentedMethod> extract_documented_methods(std::string_view src) {
  std::vector<DocumentedMethod> out;
  std::size_t i = 0;
  while (i < src.size()) {
    if (src.compare(i, 3, "/**") != 0 || src.compare(i, 4, "/**/") == 0) {
      const std::size_t j = skip_opaque(src, i);
      i = j != i ? j : i + 1;
      continue;
    }
    const std::size_t doc_begin = i;
    const std::size_t doc_end = skip_opaque(src, i);
    i = doc_end;

    // The declaration runs to the first '{' or ';' outside literals.
    std::size_t k = doc_end;
    while (k < src.size() && src[k] != '{' && src[k] != ';') {
      if (src.compare(k, 3, "/**") == 0) break;  // another doc comment: this one is orphaned
      const std::size_t j = skip_opaque(src, k);
      k = j != k ? j : k + 1;
    }
    if (k >= src.size() || src[k] != '{') continue;
    std::string_view header = src.substr(doc_end, k - doc_end);
    if (has_word(header, "class") || has_word(header, "interface") || has_word(header, "enum") ||
        has_word(header, "record") || header.find('=') != std::string_view::npos)
      continue;
    const auto close = header.rfind(')');
    if (close == std::string_view::npos) continue;
    int depth = 0;
    std::size_t open = std::string_view::npos;
    for (std::size_t p = close + 1; p-- > 0;) {
      if (header[p] == ')') ++depth;
      if (header[p] == '(' && --depth == 0) {
        open = p;
        break;
      }
    }
    if (open == std::string_view::npos) continue;
    std::size_t name_end = open;
    while (name_end > 0 && is_space(header[name_end - 1])) --name_end;
    std::size_t name_begin = name_end;
    while (name_begin > 0 && is_ident(header[name_begin - 1])) --name_begin;
    if (name_begin == name_end) continue;

    const std::size_t body_end = match_brace(src, k);
    std::size_t decl = doc_end;
    while (decl < k && is_space(src[decl])) ++decl;

    DocumentedMethod m;
    m.name = std::string(header.substr(name_begin, name_end - name_begin));
    m.key = m.name + "(" + collapse(header.substr(open + 1, close - open - 1)) + ")";
    m.doc = std::string(src.substr(doc_begin, doc_end - doc_begin));
    m.text = std::string(src.substr(decl, body_end + 1 - decl));
    m.line = 1;
    for (std::size_t p = 0; p < decl; ++p)
      if (src[p] == '\n') ++m.line;
    out.push_back(std::move(m));
    i = body_end + 1;
  }
  return out;
}

}  // namespace coco
