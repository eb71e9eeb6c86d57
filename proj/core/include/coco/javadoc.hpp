#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coco/corpus.hpp"
#include "coco/error.hpp"

namespace coco {

class ParseError : public Error {
 public:
  using Error::Error;
};

// The sections of a documentation comment that become examples. Section
// texts keep their tag ("@return the id", "@param n the count") so that
// infer_category classifies them.
struct DocComment {
  std::string summary;
  std::optional<std::string> returns;
  std::vector<std::pair<std::string, std::string>> params;  // name -> "@param name ..."

  // (category, key, text) per present section; key is "" except for params.
  struct Section {
    Category category;
    std::string key;
    std::string text;
  };
  std::vector<Section> sections() const;
};

DocComment parse_doc_comment(std::string_view raw);

struct DocumentedMethod {
  std::string name;
  std::string key;   // name plus whitespace-normalized parameter list
  std::string doc;   // raw "/** ... */" text
  std::string text;  // declaration through the closing brace
  std::size_t line = 0;
};

// Methods (and constructors) with a body that are immediately preceded by a
// "/** */" comment. Throws ParseError on unterminated comments or literals and
// on unbalanced braces.
std::vector<DocumentedMethod> extract_documented_methods(std::string_view source);

}  // namespace coco
