#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "coco/codelex.hpp"
#include "coco/error.hpp"

namespace coco {

enum class EditAction { kKeep, kInsert, kDelete, kReplace };

std::string_view to_string(EditAction action);

struct EditSpan {
  EditAction action;
  std::vector<std::string> old_tokens;
  std::vector<std::string> new_tokens;  // empty for KEEP (same as old side)

  friend bool operator==(const EditSpan&, const EditSpan&) = default;
};

// Maximal span diff between two token sequences. Adjacent spans never share
// an action, and a DELETE directly followed by an INSERT is one REPLACE.
struct EditSequence {
  std::vector<EditSpan> spans;

  std::vector<std::string> old_side() const;
  std::vector<std::string> new_side() const;

  friend bool operator==(const EditSequence&, const EditSequence&) = default;
};

namespace markers {
inline constexpr std::string_view kKeepOpen = "<KEEP>";
inline constexpr std::string_view kKeepClose = "</KEEP>";
inline constexpr std::string_view kInsertOpen = "<INSERT>";
inline constexpr std::string_view kInsertClose = "</INSERT>";
inline constexpr std::string_view kDeleteOpen = "<DELETE>";
inline constexpr std::string_view kDeleteClose = "</DELETE>";
inline constexpr std::string_view kReplaceOld = "<REPLACE_OLD>";
inline constexpr std::string_view kReplaceNew = "<REPLACE_NEW>";
inline constexpr std::string_view kReplaceClose = "</REPLACE>";

inline constexpr std::array<std::string_view, 9> kAll = {
    kKeepOpen,   kKeepClose,  kInsertOpen, kInsertClose, kDeleteOpen,
    kDeleteClose, kReplaceOld, kReplaceNew, kReplaceClose};

bool is_marker(std::string_view token);
}  // namespace markers

// Raised by apply() when the edit's old side does not match the input.
class ApplyError : public Error {
 public:
  explicit ApplyError(std::size_t index)
      : Error("edit old side diverges from input at token index " +
              std::to_string(index)),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class FlatParseError : public Error {
 public:
  using Error::Error;
};

// LCS alignment over token texts, leftmost matches preferred on ties.
EditSequence diff(const std::vector<std::string>& old_tokens,
                  const std::vector<std::string>& new_tokens);
EditSequence diff(const TokenStream& old_tokens, const TokenStream& new_tokens);

// Rebuilds the new-side sequence. Throws ApplyError with the first diverging
// index when the edit's old side does not match old_tokens.
std::vector<std::string> apply(const EditSequence& edit,
                               const std::vector<std::string>& old_tokens);

std::vector<std::string> flatten(const EditSequence& edit);
EditSequence parse_flat(const std::vector<std::string>& flat);

}  // namespace coco
