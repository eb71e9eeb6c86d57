#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "coco/corpus.hpp"

namespace coco {

// A labeled toy corpus where the label is a keyword-overlap rule: each
// comment names one keyword, each method mentions `code_keywords` distinct
// keywords, and the pair is inconsistent iff the comment's keyword does not
// occur in the method.
struct SyntheticOptions {
  std::size_t examples = 2000;
  std::size_t keywords = 20;      // size of the keyword pool (<= 64)
  std::size_t code_keywords = 1;  // keywords mentioned per method
  double valid_fraction = 0.2;
  double test_fraction = 0.0;
  std::uint64_t seed = 7;
};

std::vector<Example> synthetic_corpus(const SyntheticOptions& options);

const std::vector<std::string>& synthetic_keywords(std::size_t count);

// Number of pool keywords shared by the comment and the current method.
std::size_t keyword_overlap(const Example& example, std::size_t keywords);

// The rule as a linear classifier on the overlap feature:
// decision = 0.5 - overlap, inconsistent iff decision >= 0.
int linear_oracle(const Example& example, std::size_t keywords);

}  // namespace coco
