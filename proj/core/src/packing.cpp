#include "coco/packing.hpp"

#include <algorithm>
#include <fstream>

#include "coco/codelex.hpp"
#include "coco/editseq.hpp"

namespace coco {

std::string_view to_string(InputMode mode) {
  return mode == InputMode::kPostHoc ? "posthoc" : "jit";
}

InputMode parse_mode(std::string_view text) {
  if (text == "posthoc") return InputMode::kPostHoc;
  if (text == "jit") return InputMode::kJustInTime;
  throw Error("unknown mode '" + std::string(text) + "' (expected posthoc or jit)");
}

std::size_t PackedInput::real_length() const {
  return static_cast<std::size_t>(
      std::count(attention_mask.begin(), attention_mask.end(), std::uint8_t{1}));
}

PackedInput pack(std::span<const PieceId> comment_ids, std::span<const PieceId> code_ids,
                 std::size_t max_len, std::size_t pad_to) {
  if (max_len < 3) throw Error("max_len must be at least 3, got " + std::to_string(max_len));
  if (pad_to > max_len) throw Error("pad_to exceeds max_len");

  PackedInput out;
  auto push = [&](PieceId id, std::uint8_t segment) {
    out.ids.push_back(id);
    out.attention_mask.push_back(1);
    out.segment_mask.push_back(segment);
  };

  if (comment_ids.size() + 3 <= max_len) {
    const std::size_t code_budget = max_len - 3 - comment_ids.size();
    const std::size_t code_kept = std::min(code_budget, code_ids.size());
    push(specials::kClsId, 0);
    for (auto id : comment_ids) push(id, 0);
    push(specials::kSepId, 0);
    for (std::size_t k = 0; k < code_kept; ++k) push(code_ids[k], 1);
    push(specials::kSepId, 1);
  } else {
    const std::size_t comment_kept = std::min(comment_ids.size(), max_len - 2);
    push(specials::kClsId, 0);
    for (std::size_t k = 0; k < comment_kept; ++k) push(comment_ids[k], 0);
    push(specials::kSepId, 0);
  }

  const std::uint8_t pad_segment = out.segment_mask.back();
  while (out.ids.size() < pad_to) {
    out.ids.push_back(specials::kPadId);
    out.attention_mask.push_back(0);
    out.segment_mask.push_back(pad_segment);
  }
  return out;
}

std::vector<std::string> comment_subtokens(const std::string& comment) {
  return subtokenize(lex_comment(normalize_comment(comment)));
}

std::vector<std::string> method_subtokens(const std::string& method) {
  return subtokenize(lex_code(method));
}

std::vector<std::string> edit_subtokens(const std::string& method_old,
                                        const std::string& method_new) {
  const auto flat = flatten(diff(lex_code(method_old), lex_code(method_new)));
  TokenStream stream;
  stream.reserve(flat.size());
  // Re-lexing would split the markers, so restore kinds directly: markers
  // stay whole, everything else is lexed as the single code token it was.
  for (const auto& tok : flat) {
    if (markers::is_marker(tok)) {
      stream.push_back({tok, TokenKind::kMarker});
    } else {
      auto relexed = lex_code(tok);
      stream.insert(stream.end(), relexed.begin(), relexed.end());
    }
  }
  return subtokenize(stream);
}

EncodedSides encode_sides(const Example& example, const SubwordVocab& vocab, InputMode mode) {
  EncodedSides sides;
  sides.comment = vocab.encode(comment_subtokens(example.comment));
  sides.code = mode == InputMode::kPostHoc
                   ? vocab.encode(method_subtokens(example.method_new))
                   : vocab.encode(edit_subtokens(example.method_old, example.method_new));
  return sides;
}

PackedInput pack_example(const Example& example, const SubwordVocab& vocab, InputMode mode,
                         std::size_t max_len, std::size_t pad_to) {
  const auto sides = encode_sides(example, vocab, mode);
  PackedInput out = pack(sides.comment, sides.code, max_len, pad_to);
  out.label = example.label;
  out.id = example.id;
  return out;
}

PackedInput pack_posthoc(const Example& example, const SubwordVocab& vocab,
                         std::size_t max_len, std::size_t pad_to) {
  return pack_example(example, vocab, InputMode::kPostHoc, max_len, pad_to);
}

PackedInput pack_jit(const Example& example, const SubwordVocab& vocab, std::size_t max_len,
                     std::size_t pad_to) {
  return pack_example(example, vocab, InputMode::kJustInTime, max_len, pad_to);
}

PackedInput padded_to(const PackedInput& input, std::size_t length) {
  PackedInput out = input;
  const std::size_t real = input.real_length();
  if (length < real) throw Error("cannot pad below the real length");
  out.ids.resize(real);
  out.attention_mask.resize(real);
  out.segment_mask.resize(real);
  const std::uint8_t seg = real > 0 ? out.segment_mask.back() : 0;
  out.ids.resize(length, specials::kPadId);
  out.attention_mask.resize(length, 0);
  out.segment_mask.resize(length, seg);
  return out;
}

void pad_batch(std::span<PackedInput> batch) {
  std::size_t longest = 0;
  for (const auto& p : batch) longest = std::max(longest, p.real_length());
  for (auto& p : batch) p = padded_to(p, longest);
}

std::string to_json_line(const PackedInput& input) {
  nlohmann::json j{{"id", input.id},
                   {"ids", input.ids},
                   {"attention_mask", input.attention_mask},
                   {"segment_mask", input.segment_mask}};
  j["label"] = input.label ? nlohmann::json(*input.label) : nlohmann::json(nullptr);
  return j.dump();
}

PackedInput packed_from_json_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  PackedInput p;
  p.id = j.value("id", std::string());
  p.ids = j.at("ids").get<std::vector<PieceId>>();
  p.attention_mask = j.at("attention_mask").get<std::vector<std::uint8_t>>();
  p.segment_mask = j.at("segment_mask").get<std::vector<std::uint8_t>>();
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) p.label = it->get<int>();
  if (p.ids.size() != p.attention_mask.size() || p.ids.size() != p.segment_mask.size())
    throw Error("packed record " + p.id + " has mismatched mask lengths");
  return p;
}

void write_packed(const std::filesystem::path& path, std::span<const PackedInput> inputs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& p : inputs) out << to_json_line(p) << '\n';
}

std::vector<PackedInput> read_packed(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<PackedInput> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(packed_from_json_line(line));
  }
  return out;
}

}  // namespace coco
