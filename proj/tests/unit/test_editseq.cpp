#include <doctest.h>

#include <random>

#include "coco/editseq.hpp"
#include "support.hpp"

using namespace coco;
using V = std::vector<std::string>;

namespace {

std::size_t lcs_length(const V& a, const V& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
  return t[a.size()][b.size()];
}

std::size_t changed_tokens(const EditSequence& e) {
  std::size_t n = 0;
  for (const auto& s : e.spans)
    if (s.action != EditAction::kKeep) n += s.old_tokens.size() + s.new_tokens.size();
  return n;
}

}  // namespace

TEST_CASE("diff of identical sequences is one KEEP span") {
  const V t = {"a", "b", "c"};
  const auto e = diff(t, t);
  REQUIRE(e.spans.size() == 1);
  CHECK(e.spans[0].action == EditAction::kKeep);
  CHECK(e.spans[0].old_tokens == t);
}

TEST_CASE("diff from empty is one INSERT span") {
  const auto e = diff(V{}, V{"x", "y"});
  REQUIRE(e.spans.size() == 1);
  CHECK(e.spans[0].action == EditAction::kInsert);
  CHECK(e.spans[0].new_tokens == V{"x", "y"});
  CHECK(diff(V{}, V{}).spans.empty());
}

TEST_CASE("single-token replacement") {
  const V a = {"return", "x", ";"}, b = {"return", "y", ";"};
  const auto e = diff(a, b);
  REQUIRE(e.spans.size() == 3);
  CHECK(e.spans[0] == EditSpan{EditAction::kKeep, {"return"}, {}});
  CHECK(e.spans[1] == EditSpan{EditAction::kReplace, {"x"}, {"y"}});
  CHECK(e.spans[2] == EditSpan{EditAction::kKeep, {";"}, {}});
  CHECK(coco::apply(e, a) == b);
  CHECK(flatten(e) == V{"<KEEP>", "return", "</KEEP>", "<REPLACE_OLD>", "x", "<REPLACE_NEW>",
                        "y", "</REPLACE>", "<KEEP>", ";", "</KEEP>"});
}

TEST_CASE("flatten small cases") {
  CHECK(flatten(EditSequence{{{EditAction::kKeep, {"a"}, {}}}}) == V{"<KEEP>", "a", "</KEEP>"});
  CHECK(flatten(EditSequence{{{EditAction::kReplace, {"x"}, {"y"}}}}) ==
        V{"<REPLACE_OLD>", "x", "<REPLACE_NEW>", "y", "</REPLACE>"});
  CHECK(flatten(EditSequence{}).empty());
}

TEST_CASE("apply reports the first diverging index") {
  const auto e = diff(V{"a", "b", "c"}, V{"a", "c"});
  try {
    coco::apply(e, V{"a", "z", "c"});
    FAIL("expected ApplyError");
  } catch (const ApplyError& err) {
    CHECK(err.index() == 1);
  }
  CHECK_THROWS_AS(coco::apply(e, V{"a", "b"}), ApplyError);
}

TEST_CASE("parse_flat rejects malformed sequences") {
  CHECK_THROWS_AS(parse_flat(V{"<KEEP>", "a"}), FlatParseError);
  CHECK_THROWS_AS(parse_flat(V{"a"}), FlatParseError);
  CHECK_THROWS_AS(parse_flat(V{"<REPLACE_OLD>", "a", "</REPLACE>"}), FlatParseError);
}

TEST_CASE("property: round trip, minimality and span shape") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto a = testing::random_tokens(rng, 40, 6);
    const auto b = testing::random_tokens(rng, 40, 6);
    const auto e = diff(a, b);
    REQUIRE(coco::apply(e, a) == b);
    REQUIRE(e.old_side() == a);
    REQUIRE(e.new_side() == b);
    REQUIRE(changed_tokens(e) == a.size() + b.size() - 2 * lcs_length(a, b));
    REQUIRE(parse_flat(flatten(e)) == e);
    for (std::size_t k = 0; k < e.spans.size(); ++k) {
      const auto& s = e.spans[k];
      CHECK((!s.old_tokens.empty() || !s.new_tokens.empty()));
      if (k > 0) {
        CHECK(e.spans[k - 1].action != s.action);
        CHECK_FALSE((e.spans[k - 1].action == EditAction::kDelete &&
                     s.action == EditAction::kInsert));
      }
    }
  }
}

TEST_CASE("markers are recognized") {
  for (auto m : markers::kAll) CHECK(markers::is_marker(m));
  CHECK_FALSE(markers::is_marker("KEEP"));
}
