#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coco/corpus.hpp"
#include "coco/subword.hpp"

namespace coco {

inline constexpr std::size_t kFullAttentionMaxLen = 512;
inline constexpr std::size_t kSlidingAttentionMaxLen = 1024;

enum class InputMode { kPostHoc, kJustInTime };

std::string_view to_string(InputMode mode);
InputMode parse_mode(std::string_view text);

// Classifier input laid out as [CLS] comment [SEP] code [SEP] [PAD]...
struct PackedInput {
  std::vector<PieceId> ids;
  std::vector<std::uint8_t> attention_mask;  // 1 = real token, 0 = PAD
  std::vector<std::uint8_t> segment_mask;    // 0 = comment side, 1 = code side
  std::optional<int> label;
  std::string id;

  std::size_t real_length() const;

  friend bool operator==(const PackedInput&, const PackedInput&) = default;
};

// Packs pre-encoded sides. When everything fits all tokens are kept;
// otherwise the code side loses tokens from its end. When even the comment
// alone does not fit (|C| + 3 > max_len) the comment tail is cut and the
// result is [CLS] C' [SEP] with no code side. Right-padded to pad_to.
PackedInput pack(std::span<const PieceId> comment_ids, std::span<const PieceId> code_ids,
                 std::size_t max_len, std::size_t pad_to = 0);

// Subword ids for each side, before packing.
struct EncodedSides {
  std::vector<PieceId> comment;
  std::vector<PieceId> code;
};

std::vector<std::string> comment_subtokens(const std::string& comment);
std::vector<std::string> method_subtokens(const std::string& method);
// Subtokenized flat edit sequence between the two method versions.
std::vector<std::string> edit_subtokens(const std::string& method_old,
                                        const std::string& method_new);

EncodedSides encode_sides(const Example& example, const SubwordVocab& vocab, InputMode mode);

PackedInput pack_posthoc(const Example& example, const SubwordVocab& vocab,
                         std::size_t max_len, std::size_t pad_to = 0);
PackedInput pack_jit(const Example& example, const SubwordVocab& vocab,
                     std::size_t max_len, std::size_t pad_to = 0);
PackedInput pack_example(const Example& example, const SubwordVocab& vocab, InputMode mode,
                         std::size_t max_len, std::size_t pad_to = 0);

// Right-pads every input to the longest real length in the batch.
void pad_batch(std::span<PackedInput> batch);
// Returns a copy padded (or trimmed of trailing PAD) to `length`.
PackedInput padded_to(const PackedInput& input, std::size_t length);

// Packed records as JSON lines: {"id", "ids", "attention_mask",
// "segment_mask", "label"}.
std::string to_json_line(const PackedInput& input);
PackedInput packed_from_json_line(const std::string& line);
void write_packed(const std::filesystem::path& path, std::span<const PackedInput> inputs);
std::vector<PackedInput> read_packed(const std::filesystem::path& path);

}  // namespace coco
