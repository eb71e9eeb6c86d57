#include <doctest.h>

#include <random>

#include "coco/subword.hpp"
#include "support.hpp"

using namespace coco;
using V = std::vector<std::string>;

namespace {

std::vector<V> corpus_of(std::initializer_list<std::pair<const char*, int>> words) {
  std::vector<V> out;
  for (const auto& [w, n] : words)
    for (int k = 0; k < n; ++k) out.push_back({w});
  return out;
}

std::string random_word(std::mt19937_64& rng, const std::string& alphabet, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<std::size_t> ch(0, alphabet.size() - 1);
  std::string w(len(rng), ' ');
  for (auto& c : w) c = alphabet[ch(rng)];
  return w;
}

}  // namespace

TEST_CASE("specials occupy the first ids") {
  const auto& s = specials::all();
  REQUIRE(s.size() == 13);
  CHECK(s[specials::kPadId] == "[PAD]");
  CHECK(s[specials::kUnkId] == "[UNK]");
  CHECK(s[specials::kClsId] == "[CLS]");
  CHECK(s[specials::kSepId] == "[SEP]");
  CHECK(s[4] == "<KEEP>");
}

TEST_CASE("BPE picks the most frequent pair first") {
  // a a a b</w> and a a b</w>: (a,a) occurs 3 times, (a,b</w>) twice.
  const auto corpus = corpus_of({{"aaab", 1}, {"aab", 1}});
  const auto v = train_bpe(corpus, 13 + 2 + 1);
  REQUIRE(v.merges().size() == 1);
  CHECK(v.merges()[0] == std::pair<std::string, std::string>{"a", "a"});
  CHECK(v.pieces().back() == "aa");
}

TEST_CASE("BPE with room for only the alphabet has no merges") {
  const auto corpus = corpus_of({{"aaab", 1}, {"aab", 1}});
  const auto v = train_bpe(corpus, 13 + 2);
  CHECK(v.merges().empty());
  CHECK(v.size() == 15);
  CHECK_THROWS_AS(train_bpe(corpus, 14), Error);
  CHECK_THROWS_AS(train_bpe(std::vector<V>{}, 100), Error);
}

TEST_CASE("BPE training is deterministic") {
  std::mt19937_64 rng(5);
  std::vector<V> corpus;
  for (int k = 0; k < 300; ++k) corpus.push_back({random_word(rng, "abcdef", 8)});
  const auto a = train_bpe(corpus, 120);
  const auto b = train_bpe(corpus, 120);
  CHECK(a.merges() == b.merges());
  CHECK(a.pieces() == b.pieces());
}

TEST_CASE("WordPiece merges the only candidate pair") {
  const auto v = train_wordpiece(corpus_of({{"ab", 5}}), 13 + 2 + 1);
  CHECK(v.pieces().back() == "ab");
  CHECK(v.encode_token("ab") == std::vector<PieceId>{v.id("ab")});
}

TEST_CASE("WordPiece ratio score favours rare parts over raw frequency") {
  // score(a,##b) = 10 / (100 * 10) = 0.01, score(c,##d) = 5 / (5 * 5) = 0.2
  const auto corpus = corpus_of({{"ab", 10}, {"a", 90}, {"cd", 5}});
  const auto wp = train_wordpiece(corpus, 13 + 4 + 1);
  CHECK(wp.pieces().back() == "cd");
  // Frequency alone would pick the other pair.
  const auto bpe = train_bpe(corpus, 13 + 5 + 1);
  CHECK(bpe.merges().front().first == "a");
}

TEST_CASE("WordPiece greedy longest match") {
  auto pieces = specials::all();
  for (const char* p : {"u", "n", "un", "##aff", "##able", "##a", "##f"}) pieces.push_back(p);
  const SubwordVocab v(SubwordScheme::kWordPiece, pieces.size(), pieces, {});
  CHECK(v.encode_token("unaffable") ==
        std::vector<PieceId>{v.id("un"), v.id("##aff"), v.id("##able")});
  CHECK(v.encode_token("unz") == std::vector<PieceId>{specials::kUnkId});
  CHECK(v.encode_token("un") == std::vector<PieceId>{v.id("un")});
}

TEST_CASE("unknown characters become UNK") {
  const auto v = train_bpe(corpus_of({{"abc", 3}}), 40);
  CHECK(v.encode_token("abz") == std::vector<PieceId>{specials::kUnkId});
  const V toks = {"[CLS]", "abc", "[SEP]"};
  const auto ids = v.encode(toks);
  CHECK(ids.front() == specials::kClsId);
  CHECK(ids.back() == specials::kSepId);
}

TEST_CASE("decode rejects out-of-range ids") {
  const auto v = train_bpe(corpus_of({{"abc", 3}}), 40);
  const std::vector<PieceId> bad = {static_cast<PieceId>(v.size())};
  CHECK_THROWS_AS(v.decode(bad), Error);
}

TEST_CASE("property: decode(encode(x)) == x for UNK-free inputs") {
  std::mt19937_64 rng(9);
  const std::string alphabet = "abcdefgh";
  std::vector<V> corpus;
  for (int k = 0; k < 400; ++k) corpus.push_back({random_word(rng, alphabet, 10)});
  for (auto scheme : {SubwordScheme::kBpe, SubwordScheme::kWordPiece}) {
    const auto v = train_vocab(scheme, corpus, 150);
    std::size_t checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      V tokens;
      const int n = std::uniform_int_distribution<int>(1, 5)(rng);
      for (int k = 0; k < n; ++k) tokens.push_back(random_word(rng, alphabet, 12));
      const auto ids = v.encode(tokens);
      if (std::find(ids.begin(), ids.end(), specials::kUnkId) != ids.end()) continue;
      ++checked;
      REQUIRE(v.decode(ids) == tokens);
    }
    CHECK(checked > 900);
  }
}

TEST_CASE("save and load round trip") {
  testing::TempDir dir;
  std::mt19937_64 rng(2);
  std::vector<V> corpus;
  for (int k = 0; k < 200; ++k) corpus.push_back({random_word(rng, "xyzw", 7)});
  for (auto scheme : {SubwordScheme::kBpe, SubwordScheme::kWordPiece}) {
    const auto v = train_vocab(scheme, corpus, 60);
    v.save(dir / "v.txt");
    const auto w = SubwordVocab::load(dir / "v.txt");
    CHECK(w.scheme() == v.scheme());
    CHECK(w.pieces() == v.pieces());
    CHECK(w.merges() == v.merges());
    const V probe = {"xyzzy", "wxyz"};
    CHECK(w.encode(probe) == v.encode(probe));
  }
}
