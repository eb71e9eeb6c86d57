#include "coco/editseq.hpp"

#include <algorithm>
#include <cstdint>

namespace coco {
namespace {

enum class Op : std::uint8_t { kMatch, kDelete, kInsert };

// Suffix LCS table: cell (i, j) holds LCS(a[i:], b[j:]).
template <typename Cell>
std::vector<Op> align(const std::vector<std::string>& a,
                      const std::vector<std::string>& b, std::size_t start) {
  const std::size_t n = a.size() - start;
  const std::size_t m = b.size() - start;
  const std::size_t width = m + 1;
  std::vector<Cell> table((n + 1) * width, 0);
  auto at = [&](std::size_t i, std::size_t j) -> Cell& { return table[i * width + j]; };
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      if (a[start + i] == b[start + j])
        at(i, j) = static_cast<Cell>(at(i + 1, j + 1) + 1);
      else
        at(i, j) = std::max(at(i + 1, j), at(i, j + 1));
    }
  }
  std::vector<Op> ops;
  ops.reserve(n + m);
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < n && j < m) {
    if (a[start + i] == b[start + j]) {
      ops.push_back(Op::kMatch);
      ++i;
      ++j;
    } else if (at(i + 1, j) >= at(i, j + 1)) {
      ops.push_back(Op::kDelete);
      ++i;
    } else {
      ops.push_back(Op::kInsert);
      ++j;
    }
  }
  for (; i < n; ++i) ops.push_back(Op::kDelete);
  for (; j < m; ++j) ops.push_back(Op::kInsert);
  return ops;
}

}  // namespace

std::string_view to_string(EditAction action) {
  switch (action) {
    case EditAction::kKeep: return "KEEP";
    case EditAction::kInsert: return "INSERT";
    case EditAction::kDelete: return "DELETE";
    case EditAction::kReplace: return "REPLACE";
  }
  return "?";
}

bool markers::is_marker(std::string_view token) {
  return std::find(kAll.begin(), kAll.end(), token) != kAll.end();
}

std::vector<std::string> EditSequence::old_side() const {
  std::vector<std::string> out;
  for (const auto& span : spans)
    if (span.action != EditAction::kInsert)
      out.insert(out.end(), span.old_tokens.begin(), span.old_tokens.end());
  return out;
}

std::vector<std::string> EditSequence::new_side() const {
  std::vector<std::string> out;
  for (const auto& span : spans) {
    const auto& side = span.action == EditAction::kKeep ? span.old_tokens : span.new_tokens;
    out.insert(out.end(), side.begin(), side.end());
  }
  return out;
}

EditSequence diff(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t prefix = 0;
  while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) ++prefix;

  std::vector<Op> ops(prefix, Op::kMatch);
  const std::size_t longest = std::max(a.size(), b.size()) - prefix;
  auto rest = longest < 0xFFFF ? align<std::uint16_t>(a, b, prefix)
                               : align<std::uint32_t>(a, b, prefix);
  ops.insert(ops.end(), rest.begin(), rest.end());

  EditSequence edit;
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;
  while (k < ops.size()) {
    if (ops[k] == Op::kMatch) {
      EditSpan keep{EditAction::kKeep, {}, {}};
      while (k < ops.size() && ops[k] == Op::kMatch) {
        keep.old_tokens.push_back(a[i]);
        ++i;
        ++j;
        ++k;
      }
      edit.spans.push_back(std::move(keep));
      continue;
    }
    // A gap between matches: gather deletions before insertions so that any
    // mixed gap becomes a single REPLACE.
    std::vector<std::string> removed;
    std::vector<std::string> added;
    while (k < ops.size() && ops[k] != Op::kMatch) {
      if (ops[k] == Op::kDelete)
        removed.push_back(a[i++]);
      else
        added.push_back(b[j++]);
      ++k;
    }
    if (!removed.empty() && !added.empty())
      edit.spans.push_back({EditAction::kReplace, std::move(removed), std::move(added)});
    else if (!removed.empty())
      edit.spans.push_back({EditAction::kDelete, std::move(removed), {}});
    else
      edit.spans.push_back({EditAction::kInsert, {}, std::move(added)});
  }
  return edit;
}

EditSequence diff(const TokenStream& old_tokens, const TokenStream& new_tokens) {
  return diff(texts(old_tokens), texts(new_tokens));
}

std::vector<std::string> apply(const EditSequence& edit,
                               const std::vector<std::string>& old_tokens) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  auto consume = [&](const std::vector<std::string>& expected) {
    for (const auto& tok : expected) {
      if (pos >= old_tokens.size() || old_tokens[pos] != tok) throw ApplyError(pos);
      ++pos;
    }
  };
  for (const auto& span : edit.spans) {
    switch (span.action) {
      case EditAction::kKeep:
        consume(span.old_tokens);
        out.insert(out.end(), span.old_tokens.begin(), span.old_tokens.end());
        break;
      case EditAction::kDelete:
        consume(span.old_tokens);
        break;
      case EditAction::kInsert:
        out.insert(out.end(), span.new_tokens.begin(), span.new_tokens.end());
        break;
      case EditAction::kReplace:
        consume(span.old_tokens);
        out.insert(out.end(), span.new_tokens.begin(), span.new_tokens.end());
        break;
    }
  }
  if (pos != old_tokens.size()) throw ApplyError(pos);
  return out;
}

std::vector<std::string> flatten(const EditSequence& edit) {
  std::vector<std::string> flat;
  auto emit = [&](std::string_view marker) { flat.emplace_back(marker); };
  auto emit_all = [&](const std::vector<std::string>& toks) {
    flat.insert(flat.end(), toks.begin(), toks.end());
  };
  for (const auto& span : edit.spans) {
    switch (span.action) {
      case EditAction::kKeep:
        emit(markers::kKeepOpen);
        emit_all(span.old_tokens);
        emit(markers::kKeepClose);
        break;
      case EditAction::kInsert:
        emit(markers::kInsertOpen);
        emit_all(span.new_tokens);
        emit(markers::kInsertClose);
        break;
      case EditAction::kDelete:
        emit(markers::kDeleteOpen);
        emit_all(span.old_tokens);
        emit(markers::kDeleteClose);
        break;
      case EditAction::kReplace:
        emit(markers::kReplaceOld);
        emit_all(span.old_tokens);
        emit(markers::kReplaceNew);
        emit_all(span.new_tokens);
        emit(markers::kReplaceClose);
        break;
    }
  }
  return flat;
}

EditSequence parse_flat(const std::vector<std::string>& flat) {
  EditSequence edit;
  std::size_t k = 0;
  auto read_until = [&](std::string_view close) {
    std::vector<std::string> toks;
    while (k < flat.size() && flat[k] != close) {
      if (markers::is_marker(flat[k]))
        throw FlatParseError("unexpected marker " + flat[k] + " at index " +
                             std::to_string(k));
      toks.push_back(flat[k++]);
    }
    if (k >= flat.size())
      throw FlatParseError("missing " + std::string(close));
    ++k;
    return toks;
  };
  while (k < flat.size()) {
    const std::string& open = flat[k++];
    if (open == markers::kKeepOpen) {
      edit.spans.push_back({EditAction::kKeep, read_until(markers::kKeepClose), {}});
    } else if (open == markers::kInsertOpen) {
      edit.spans.push_back({EditAction::kInsert, {}, read_until(markers::kInsertClose)});
    } else if (open == markers::kDeleteOpen) {
      edit.spans.push_back({EditAction::kDelete, read_until(markers::kDeleteClose), {}});
    } else if (open == markers::kReplaceOld) {
      auto old_toks = read_until(markers::kReplaceNew);
      auto new_toks = read_until(markers::kReplaceClose);
      edit.spans.push_back({EditAction::kReplace, std::move(old_toks), std::move(new_toks)});
    } else {
      throw FlatParseError("expected an opening marker at index " + std::to_string(k - 1) +
                           ", got " + open);
    }
  }
  return edit;
}

}  // namespace coco
