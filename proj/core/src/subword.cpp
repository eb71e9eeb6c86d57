#include "coco/subword.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <unordered_set>

#include "coco/editseq.hpp"

namespace coco {

namespace specials {
const std::vector<std::string>& all() {
  static const std::vector<std::string> kAll = [] {
    std::vector<std::string> v = {std::string(kPad), std::string(kUnk),
                                  std::string(kCls), std::string(kSep)};
    for (auto m : markers::kAll) v.emplace_back(m);
    return v;
  }();
  return kAll;
}
}  // namespace specials

std::string_view to_string(SubwordScheme scheme) {
  return scheme == SubwordScheme::kBpe ? "bpe" : "wordpiece";
}

SubwordScheme parse_scheme(std::string_view text) {
  if (text == "bpe") return SubwordScheme::kBpe;
  if (text == "wordpiece") return SubwordScheme::kWordPiece;
  throw Error("unknown subword scheme '" + std::string(text) + "'");
}

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0 && lead < 0xF8) len = 4;
    else if (lead >= 0xE0) len = lead < 0xF0 ? 3 : 1;
    else if (lead >= 0xC0) len = 2;
    if (i + len > text.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

namespace {

bool is_special_text(std::string_view token) {
  const auto& all = specials::all();
  return std::find(all.begin(), all.end(), token) != all.end();
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::string merge_key(std::string_view left, std::string_view right) {
  std::string key;
  key.reserve(left.size() + right.size() + 1);
  key.append(left);
  key.push_back('\x1f');
  key.append(right);
  return key;
}

// Initial symbols of a word under each scheme.
std::vector<std::string> initial_symbols(SubwordScheme scheme, std::string_view word) {
  auto chars = utf8_chars(word);
  if (chars.empty()) return chars;
  if (scheme == SubwordScheme::kBpe) {
    chars.back() += kEndOfWord;
  } else {
    for (std::size_t k = 1; k < chars.size(); ++k)
      chars[k] = std::string(kContinuationPrefix) + chars[k];
  }
  return chars;
}

std::string merged_symbol(SubwordScheme scheme, std::string_view left,
                          std::string_view right) {
  std::string out(left);
  if (scheme == SubwordScheme::kWordPiece && starts_with(right, kContinuationPrefix))
    out.append(right.substr(kContinuationPrefix.size()));
  else
    out.append(right);
  return out;
}

using SymbolId = std::uint32_t;

std::uint64_t pair_key(SymbolId left, SymbolId right) {
  return (static_cast<std::uint64_t>(left) << 32) | right;
}
SymbolId key_left(std::uint64_t key) { return static_cast<SymbolId>(key >> 32); }
SymbolId key_right(std::uint64_t key) { return static_cast<SymbolId>(key & 0xFFFFFFFFu); }

// Shared merge loop for both schemes; only pair selection differs.
class MergeTrainer {
 public:
  MergeTrainer(SubwordScheme scheme, const WordCounts& words) : scheme_(scheme) {
    words_.reserve(words.size());
    for (const auto& [word, freq] : words) {
      Word w;
      w.freq = freq;
      for (auto& sym : initial_symbols(scheme, word)) w.symbols.push_back(intern(sym));
      words_.push_back(std::move(w));
    }
    for (std::size_t wi = 0; wi < words_.size(); ++wi) add_word(wi);
  }

  std::vector<std::string> alphabet() const {
    std::set<std::string> seen;
    for (const auto& w : words_)
      for (auto s : w.symbols) seen.insert(symbols_[s]);
    return {seen.begin(), seen.end()};
  }

  // Runs until `want_pieces` new distinct pieces were produced or no pair
  // remains. Returns the merges in order and the new pieces in order.
  void run(std::size_t want_pieces, std::unordered_set<std::string>& known,
           std::vector<std::string>& new_pieces,
           std::vector<std::pair<std::string, std::string>>& merges) {
    while (new_pieces.size() < want_pieces) {
      const auto best = scheme_ == SubwordScheme::kBpe ? best_by_count() : best_by_ratio();
      if (!best) break;
      const SymbolId left = key_left(*best);
      const SymbolId right = key_right(*best);
      const std::string merged = merged_symbol(scheme_, symbols_[left], symbols_[right]);
      merges.emplace_back(symbols_[left], symbols_[right]);
      apply_merge(left, right, intern(merged));
      if (known.insert(merged).second) new_pieces.push_back(merged);
    }
  }

 private:
  struct Word {
    std::vector<SymbolId> symbols;
    std::uint64_t freq = 0;
  };

  struct HeapEntry {
    std::int64_t count;
    std::uint64_t key;
  };

  SymbolId intern(const std::string& sym) {
    auto [it, inserted] = symbol_ids_.try_emplace(sym, static_cast<SymbolId>(symbols_.size()));
    if (inserted) {
      symbols_.push_back(sym);
      symbol_counts_.push_back(0);
    }
    return it->second;
  }

  bool pair_less(std::uint64_t a, std::uint64_t b) const {
    const auto& al = symbols_[key_left(a)];
    const auto& bl = symbols_[key_left(b)];
    if (al != bl) return al < bl;
    return symbols_[key_right(a)] < symbols_[key_right(b)];
  }

  auto heap_cmp() const {
    // std heap is a max-heap on "less"; larger count wins, then smaller pair.
    return [this](const HeapEntry& a, const HeapEntry& b) {
      if (a.count != b.count) return a.count < b.count;
      return pair_less(b.key, a.key);
    };
  }

  void bump(std::uint64_t key, std::int64_t delta, std::size_t word_index) {
    auto& c = pair_counts_[key];
    c += delta;
    if (delta > 0) where_[key].push_back(static_cast<std::uint32_t>(word_index));
    if (c <= 0) {
      pair_counts_.erase(key);
      where_.erase(key);
    } else if (scheme_ == SubwordScheme::kBpe) {
      heap_.push_back({c, key});
      std::push_heap(heap_.begin(), heap_.end(), heap_cmp());
    }
  }

  void add_word(std::size_t wi) {
    const auto& w = words_[wi];
    const auto f = static_cast<std::int64_t>(w.freq);
    for (auto s : w.symbols) symbol_counts_[s] += w.freq;
    for (std::size_t k = 0; k + 1 < w.symbols.size(); ++k)
      bump(pair_key(w.symbols[k], w.symbols[k + 1]), f, wi);
  }

  void remove_word(std::size_t wi) {
    const auto& w = words_[wi];
    const auto f = static_cast<std::int64_t>(w.freq);
    for (auto s : w.symbols) symbol_counts_[s] -= w.freq;
    for (std::size_t k = 0; k + 1 < w.symbols.size(); ++k)
      bump(pair_key(w.symbols[k], w.symbols[k + 1]), -f, wi);
  }

  void apply_merge(SymbolId left, SymbolId right, SymbolId merged) {
    auto it = where_.find(pair_key(left, right));
    if (it == where_.end()) return;
    std::vector<std::uint32_t> affected = it->second;
    std::sort(affected.begin(), affected.end());
    affected.erase(std::unique(affected.begin(), affected.end()), affected.end());
    for (auto wi : affected) {
      auto& syms = words_[wi].symbols;
      bool present = false;
      for (std::size_t k = 0; k + 1 < syms.size(); ++k)
        if (syms[k] == left && syms[k + 1] == right) present = true;
      if (!present) continue;
      remove_word(wi);
      std::vector<SymbolId> next;
      next.reserve(syms.size());
      for (std::size_t k = 0; k < syms.size();) {
        if (k + 1 < syms.size() && syms[k] == left && syms[k + 1] == right) {
          next.push_back(merged);
          k += 2;
        } else {
          next.push_back(syms[k++]);
        }
      }
      syms = std::move(next);
      add_word(wi);
    }
  }

  std::optional<std::uint64_t> best_by_count() {
    while (!heap_.empty()) {
      std::pop_heap(heap_.begin(), heap_.end(), heap_cmp());
      const HeapEntry top = heap_.back();
      heap_.pop_back();
      auto it = pair_counts_.find(top.key);
      if (it != pair_counts_.end() && it->second == top.count) return top.key;
    }
    return std::nullopt;
  }

  std::optional<std::uint64_t> best_by_ratio() const {
    std::optional<std::uint64_t> best;
    unsigned __int128 best_num = 0;
    unsigned __int128 best_den = 1;
    for (const auto& [key, count] : pair_counts_) {
      const auto num = static_cast<unsigned __int128>(count);
      const auto den = static_cast<unsigned __int128>(symbol_counts_[key_left(key)]) *
                       symbol_counts_[key_right(key)];
      if (!best) {
        best = key;
        best_num = num;
        best_den = den;
        continue;
      }
      const auto lhs = num * best_den;
      const auto rhs = best_num * den;
      if (lhs > rhs || (lhs == rhs && pair_less(key, *best))) {
        best = key;
        best_num = num;
        best_den = den;
      }
    }
    return best;
  }

  SubwordScheme scheme_;
  std::vector<Word> words_;
  std::vector<std::string> symbols_;
  std::vector<std::uint64_t> symbol_counts_;
  std::unordered_map<std::string, SymbolId> symbol_ids_;
  std::unordered_map<std::uint64_t, std::int64_t> pair_counts_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> where_;
  std::vector<HeapEntry> heap_;
};

SubwordVocab train(SubwordScheme scheme, std::span<const std::vector<std::string>> corpus,
                   std::size_t target_size) {
  const WordCounts words = count_words(corpus);
  if (words.empty()) throw Error("cannot train a vocabulary on an empty corpus");

  MergeTrainer trainer(scheme, words);
  std::vector<std::string> pieces = specials::all();
  const auto alphabet = trainer.alphabet();
  if (target_size < pieces.size() + alphabet.size())
    throw Error("target vocabulary size " + std::to_string(target_size) +
                " is below specials + alphabet (" +
                std::to_string(pieces.size() + alphabet.size()) + ")");
  pieces.insert(pieces.end(), alphabet.begin(), alphabet.end());

  std::unordered_set<std::string> known(pieces.begin(), pieces.end());
  std::vector<std::string> new_pieces;
  std::vector<std::pair<std::string, std::string>> merges;
  trainer.run(target_size - pieces.size(), known, new_pieces, merges);
  pieces.insert(pieces.end(), new_pieces.begin(), new_pieces.end());

  if (scheme == SubwordScheme::kWordPiece) merges.clear();
  return SubwordVocab(scheme, target_size, std::move(pieces), std::move(merges));
}

}  // namespace

WordCounts count_words(std::span<const std::vector<std::string>> corpus) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& tokens : corpus)
    for (const auto& tok : tokens)
      if (!tok.empty() && !is_special_text(tok)) ++counts[tok];
  return {counts.begin(), counts.end()};
}

SubwordVocab train_bpe(std::span<const std::vector<std::string>> corpus,
                       std::size_t target_size) {
  return train(SubwordScheme::kBpe, corpus, target_size);
}

SubwordVocab train_wordpiece(std::span<const std::vector<std::string>> corpus,
                             std::size_t target_size) {
  return train(SubwordScheme::kWordPiece, corpus, target_size);
}

SubwordVocab train_vocab(SubwordScheme scheme,
                         std::span<const std::vector<std::string>> corpus,
                         std::size_t target_size) {
  return train(scheme, corpus, target_size);
}

SubwordVocab::SubwordVocab(SubwordScheme scheme, std::size_t target_size,
                           std::vector<std::string> pieces,
                           std::vector<std::pair<std::string, std::string>> merges)
    : scheme_(scheme),
      target_size_(target_size),
      pieces_(std::move(pieces)),
      merges_(std::move(merges)) {
  build_index();
}

void SubwordVocab::build_index() {
  const auto& sp = specials::all();
  if (pieces_.size() < sp.size() || !std::equal(sp.begin(), sp.end(), pieces_.begin()))
    throw Error("vocabulary does not start with the reserved special tokens");
  index_.clear();
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    if (!index_.try_emplace(pieces_[k], static_cast<PieceId>(k)).second)
      throw Error("duplicate vocabulary piece '" + pieces_[k] + "'");
  }
  merge_rank_.clear();
  for (std::size_t k = 0; k < merges_.size(); ++k)
    merge_rank_.try_emplace(merge_key(merges_[k].first, merges_[k].second), k);
}

PieceId SubwordVocab::id(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  return it == index_.end() ? -1 : it->second;
}

const std::string& SubwordVocab::piece(PieceId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size())
    throw Error("piece id " + std::to_string(id) + " out of range (vocab size " +
                std::to_string(pieces_.size()) + ")");
  return pieces_[static_cast<std::size_t>(id)];
}

bool SubwordVocab::is_special(PieceId id) const noexcept {
  return id >= 0 && static_cast<std::size_t>(id) < specials::all().size();
}

std::vector<PieceId> SubwordVocab::encode(std::span<const std::string> tokens) const {
  std::vector<PieceId> out;
  out.reserve(tokens.size() * 2);
  for (const auto& tok : tokens) {
    auto ids = encode_token(tok);
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

std::vector<PieceId> SubwordVocab::encode_token(std::string_view token) const {
  if (token.empty()) return {};
  if (is_special_text(token)) return {id(token)};
  return scheme_ == SubwordScheme::kBpe ? encode_bpe(token) : encode_wordpiece(token);
}

std::vector<PieceId> SubwordVocab::encode_wordpiece(std::string_view token) const {
  constexpr std::size_t kMaxChars = 100;
  const auto chars = utf8_chars(token);
  if (chars.size() > kMaxChars) return {specials::kUnkId};
  std::vector<PieceId> out;
  std::size_t start = 0;
  while (start < chars.size()) {
    PieceId found = -1;
    std::size_t end = chars.size();
    for (; end > start; --end) {
      std::string candidate = start > 0 ? std::string(kContinuationPrefix) : std::string();
      for (std::size_t k = start; k < end; ++k) candidate += chars[k];
      found = id(candidate);
      if (found >= 0) break;
    }
    if (found < 0) return {specials::kUnkId};
    out.push_back(found);
    start = end;
  }
  return out;
}

std::vector<PieceId> SubwordVocab::encode_bpe(std::string_view token) const {
  auto symbols = initial_symbols(SubwordScheme::kBpe, token);
  // Replay merges in training order: after applying rank r, only ranks > r
  // may fire.
  std::size_t floor = 0;
  while (symbols.size() > 1) {
    std::size_t best_rank = merges_.size();
    for (std::size_t k = 0; k + 1 < symbols.size(); ++k) {
      auto it = merge_rank_.find(merge_key(symbols[k], symbols[k + 1]));
      if (it != merge_rank_.end() && it->second >= floor && it->second < best_rank)
        best_rank = it->second;
    }
    if (best_rank == merges_.size()) break;
    const auto& [left, right] = merges_[best_rank];
    std::vector<std::string> next;
    next.reserve(symbols.size());
    for (std::size_t k = 0; k < symbols.size();) {
      if (k + 1 < symbols.size() && symbols[k] == left && symbols[k + 1] == right) {
        next.push_back(left + right);
        k += 2;
      } else {
        next.push_back(std::move(symbols[k++]));
      }
    }
    symbols = std::move(next);
    floor = best_rank + 1;
  }
  std::vector<PieceId> out;
  out.reserve(symbols.size());
  for (const auto& s : symbols) {
    const PieceId pid = id(s);
    if (pid < 0) return {specials::kUnkId};
    out.push_back(pid);
  }
  return out;
}

std::vector<std::string> SubwordVocab::decode(std::span<const PieceId> ids) const {
  std::vector<std::string> out;
  std::string current;
  bool open = false;
  auto flush = [&] {
    if (open) out.push_back(std::move(current));
    current.clear();
    open = false;
  };
  for (const PieceId pid : ids) {
    const std::string& p = piece(pid);
    if (is_special(pid)) {
      flush();
      out.push_back(p);
      continue;
    }
    if (scheme_ == SubwordScheme::kWordPiece) {
      if (starts_with(p, kContinuationPrefix) && open) {
        current.append(p.substr(kContinuationPrefix.size()));
      } else {
        flush();
        current = p;
        open = true;
      }
    } else {
      current.append(p);
      open = true;
      if (ends_with(current, kEndOfWord)) {
        current.resize(current.size() - kEndOfWord.size());
        flush();
      }
    }
  }
  flush();
  return out;
}

void SubwordVocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write vocab file " + path.string());
  out << to_string(scheme_) << ' ' << target_size_ << '\n';
  for (const auto& p : pieces_) out << p << '\n';
  if (scheme_ == SubwordScheme::kBpe) {
    std::ofstream mout(path.string() + ".merges", std::ios::binary);
    if (!mout) throw Error("cannot write merges file " + path.string() + ".merges");
    for (const auto& [l, r] : merges_) mout << l << ' ' << r << '\n';
  }
}

SubwordVocab SubwordVocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read vocab file " + path.string());
  std::string scheme_text;
  std::size_t target = 0;
  if (!(in >> scheme_text >> target)) throw Error("malformed vocab header in " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::string> pieces;
  while (std::getline(in, line)) pieces.push_back(line);
  const SubwordScheme scheme = parse_scheme(scheme_text);
  std::vector<std::pair<std::string, std::string>> merges;
  if (scheme == SubwordScheme::kBpe) {
    std::ifstream min(path.string() + ".merges", std::ios::binary);
    if (!min) throw Error("missing merges file " + path.string() + ".merges");
    while (std::getline(min, line)) {
      const auto space = line.find(' ');
      if (space == std::string::npos) throw Error("malformed merge line '" + line + "'");
      merges.emplace_back(line.substr(0, space), line.substr(space + 1));
    }
  }
  return SubwordVocab(scheme, target, std::move(pieces), std::move(merges));
}

}  // namespace coco
