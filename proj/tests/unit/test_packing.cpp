#include <doctest.h>

#include <numeric>
#include <random>

#include "coco/codelex.hpp"
#include "coco/editseq.hpp"
#include "coco/packing.hpp"
#include "support.hpp"

using namespace coco;

namespace {

std::vector<PieceId> iota_ids(std::size_t n, PieceId start) {
  std::vector<PieceId> v(n);
  std::iota(v.begin(), v.end(), start);
  return v;
}

SubwordVocab fixture_vocab() {
  std::vector<std::vector<std::string>> corpus = {
      {"return", "the", "max", "count", "int", "get", "(", ")", "{", "}", ";", "+", "1",
       "value", "x", "y", "=", "@return"}};
  return train_bpe(corpus, 400);
}

const char* kMethod = "int getMaxCount() {\n  return value + 1;\n}";

}  // namespace

TEST_CASE("long code side is cut to fit") {
  const auto c = iota_ids(10, 100);
  const auto m = iota_ids(2000, 1000);
  const auto p = pack(c, m, 512);
  REQUIRE(p.ids.size() == 512);
  CHECK(p.ids[0] == specials::kClsId);
  CHECK(std::equal(c.begin(), c.end(), p.ids.begin() + 1));
  CHECK(p.ids[11] == specials::kSepId);
  CHECK(std::count(p.segment_mask.begin(), p.segment_mask.end(), 1) == 499 + 1);
  CHECK(p.ids[12 + 498] == m[498]);
  CHECK(p.ids.back() == specials::kSepId);
}

TEST_CASE("padding to a fixed length") {
  const auto p = pack(iota_ids(5, 100), iota_ids(5, 200), 512, 16);
  CHECK(p.ids.size() == 16);
  CHECK(p.real_length() == 13);
  CHECK(std::accumulate(p.attention_mask.begin(), p.attention_mask.end(), 0) == 13);
  CHECK(std::count(p.ids.begin(), p.ids.end(), specials::kPadId) == 3);
}

TEST_CASE("oversized comment drops the code side") {
  const auto p = pack(iota_ids(20, 100), iota_ids(5, 200), 10);
  CHECK(p.ids.size() == 10);
  CHECK(p.ids.back() == specials::kSepId);
  CHECK(std::count(p.segment_mask.begin(), p.segment_mask.end(), 1) == 0);
  CHECK_THROWS_AS(pack(iota_ids(1, 100), {}, 2), Error);
}

TEST_CASE("property: packed length and comment preservation") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> len(0, 1200), cap(3, 1024);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto c = iota_ids(len(rng) / 4, 100);
    const auto m = iota_ids(len(rng), 5000);
    const std::size_t max_len = cap(rng);
    const auto p = pack(c, m, max_len);
    REQUIRE(p.ids.size() <= max_len);
    if (c.size() + 3 <= max_len) {
      REQUIRE(std::equal(c.begin(), c.end(), p.ids.begin() + 1));
      REQUIRE(p.ids[c.size() + 1] == specials::kSepId);
      const std::size_t code = p.ids.size() - c.size() - 3;
      REQUIRE(code == std::min(m.size(), max_len - 3 - c.size()));
    }
  }
}

TEST_CASE("post hoc packing composes lexing, encoding and packing") {
  const auto vocab = fixture_vocab();
  Example e;
  e.comment = "@return the max count";
  e.method_old = kMethod;
  e.method_new = kMethod;
  e.label = 1;
  const auto p = pack_posthoc(e, vocab, 512);

  std::vector<PieceId> expected = {specials::kClsId};
  for (const char* w : {"@return", "the", "max", "count"})
    for (auto id : vocab.encode_token(w)) expected.push_back(id);
  expected.push_back(specials::kSepId);
  for (const char* w : {"int", "get", "max", "count", "(", ")", "{", "return", "value", "+", "1",
                        ";", "}"})
    for (auto id : vocab.encode_token(w)) expected.push_back(id);
  expected.push_back(specials::kSepId);
  CHECK(p.ids == expected);
  CHECK(p.label == 1);
}

TEST_CASE("just-in-time packing of an unchanged method is one KEEP span") {
  const auto vocab = fixture_vocab();
  Example e;
  e.comment = "the count";
  e.method_old = kMethod;
  e.method_new = kMethod;
  const auto sides = encode_sides(e, vocab, InputMode::kJustInTime);
  REQUIRE(sides.code.size() >= 2);
  CHECK(vocab.piece(sides.code.front()) == "<KEEP>");
  CHECK(vocab.piece(sides.code.back()) == "</KEEP>");
  CHECK(std::count(sides.code.begin(), sides.code.end(), vocab.id("<KEEP>")) == 1);
}

TEST_CASE("just-in-time packing places replace markers around the changed tokens") {
  const auto vocab = fixture_vocab();
  Example e;
  e.comment = "the count";
  e.method_old = "return x;";
  e.method_new = "return y;";
  const auto sides = encode_sides(e, vocab, InputMode::kJustInTime);
  std::vector<std::string> pieces;
  for (auto id : sides.code) pieces.push_back(vocab.piece(id));
  const std::vector<std::string> expected = {"<KEEP>", "return</w>", "</KEEP>", "<REPLACE_OLD>",
                                             "x</w>", "<REPLACE_NEW>", "y</w>", "</REPLACE>",
                                             "<KEEP>", ";</w>", "</KEEP>"};
  CHECK(pieces == expected);
}

TEST_CASE("pad_batch and JSON lines") {
  std::mt19937_64 rng(4);
  std::vector<PackedInput> batch = {testing::random_input(rng, 50, 2, 3, 0),
                                    testing::random_input(rng, 50, 4, 9, 1)};
  pad_batch(batch);
  CHECK(batch[0].ids.size() == batch[1].ids.size());
  CHECK(batch[0].real_length() == 8);
  CHECK(padded_to(batch[0], 8).ids.size() == 8);
  batch[1].id = "x1";
  CHECK(packed_from_json_line(to_json_line(batch[1])) == batch[1]);
}
