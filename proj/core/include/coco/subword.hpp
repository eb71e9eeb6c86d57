#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "coco/error.hpp"

namespace coco {

enum class SubwordScheme { kWordPiece, kBpe };

std::string_view to_string(SubwordScheme scheme);
SubwordScheme parse_scheme(std::string_view text);

using PieceId = std::int32_t;

namespace specials {
inline constexpr std::string_view kPad = "[PAD]";
inline constexpr std::string_view kUnk = "[UNK]";
inline constexpr std::string_view kCls = "[CLS]";
inline constexpr std::string_view kSep = "[SEP]";

inline constexpr PieceId kPadId = 0;
inline constexpr PieceId kUnkId = 1;
inline constexpr PieceId kClsId = 2;
inline constexpr PieceId kSepId = 3;

// PAD, UNK, CLS, SEP followed by the nine edit markers, in id order.
const std::vector<std::string>& all();
}  // namespace specials

inline constexpr std::string_view kContinuationPrefix = "##";
inline constexpr std::string_view kEndOfWord = "</w>";

// A trained WordPiece or BPE vocabulary. Specials occupy ids
// 0..specials::all().size()-1; the remaining pieces follow in training order.
class SubwordVocab {
 public:
  SubwordVocab() = default;
  SubwordVocab(SubwordScheme scheme, std::size_t target_size,
               std::vector<std::string> pieces,
               std::vector<std::pair<std::string, std::string>> merges);

  SubwordScheme scheme() const noexcept { return scheme_; }
  std::size_t target_size() const noexcept { return target_size_; }
  std::size_t size() const noexcept { return pieces_.size(); }
  const std::vector<std::string>& pieces() const noexcept { return pieces_; }
  const std::vector<std::pair<std::string, std::string>>& merges() const noexcept {
    return merges_;
  }
  // True when training ran out of pairs before reaching target_size.
  bool exhausted() const noexcept { return pieces_.size() < target_size_; }

  // Returns -1 when the piece is unknown.
  PieceId id(std::string_view piece) const;
  const std::string& piece(PieceId id) const;
  bool is_special(PieceId id) const noexcept;

  // Encodes each token independently and concatenates the ids. Specials map
  // to their reserved ids; a token that cannot be fully covered becomes UNK.
  std::vector<PieceId> encode(std::span<const std::string> tokens) const;
  std::vector<PieceId> encode_token(std::string_view token) const;

  // Inverse of encode for UNK-free output. UNK decodes to "[UNK]".
  std::vector<std::string> decode(std::span<const PieceId> ids) const;

  // Writes the vocab file and, for BPE, the sibling "<path>.merges" file.
  void save(const std::filesystem::path& path) const;
  static SubwordVocab load(const std::filesystem::path& path);

 private:
  void build_index();
  std::vector<PieceId> encode_wordpiece(std::string_view token) const;
  std::vector<PieceId> encode_bpe(std::string_view token) const;

  SubwordScheme scheme_ = SubwordScheme::kBpe;
  std::size_t target_size_ = 0;
  std::vector<std::string> pieces_;
  std::vector<std::pair<std::string, std::string>> merges_;
  std::unordered_map<std::string, PieceId> index_;
  std::unordered_map<std::string, std::size_t> merge_rank_;
};

// Word -> frequency table gathered from token lists. Specials are skipped.
using WordCounts = std::vector<std::pair<std::string, std::uint64_t>>;
WordCounts count_words(std::span<const std::vector<std::string>> corpus);

// Most frequent adjacent pair merged until target_size pieces; frequency ties
// break lexicographically on (left, right).
SubwordVocab train_bpe(std::span<const std::vector<std::string>> corpus,
                       std::size_t target_size);

// Pair score count(pair) / (count(left) * count(right)); same tie-break.
SubwordVocab train_wordpiece(std::span<const std::vector<std::string>> corpus,
                             std::size_t target_size);

SubwordVocab train_vocab(SubwordScheme scheme,
                         std::span<const std::vector<std::string>> corpus,
                         std::size_t target_size);

// Splits UTF-8 text into code points (invalid bytes stand alone).
std::vector<std::string> utf8_chars(std::string_view text);

}  // namespace coco
