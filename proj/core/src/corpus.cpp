#include "coco/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "coco/editseq.hpp"
#include "coco/packing.hpp"
#include "coco/subword.hpp"

namespace coco {
namespace fs = std::filesystem;

std::string_view to_string(Category category) {
  switch (category) {
    case Category::kReturn: return "return";
    case Category::kParam: return "param";
    case Category::kSummary: return "summary";
  }
  return "?";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "?";
}

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (const char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace

Category parse_category(std::string_view text) {
  const auto t = lower(text);
  if (t == "return" || t == "@return") return Category::kReturn;
  if (t == "param" || t == "@param") return Category::kParam;
  if (t == "summary") return Category::kSummary;
  throw Error("unknown comment category '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
  const auto t = lower(text);
  if (t == "train") return Split::kTrain;
  if (t == "valid" || t == "validation" || t == "dev") return Split::kValid;
  if (t == "test") return Split::kTest;
  throw Error("unknown split '" + std::string(text) + "'");
}

std::string normalize_comment(std::string_view comment) {
  std::string_view s = comment;
  auto trim = [](std::string_view v) {
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
    return v;
  };
  s = trim(s);
  if (s.starts_with("/**")) s.remove_prefix(3);
  else if (s.starts_with("/*")) s.remove_prefix(2);
  if (s.ends_with("*/")) s.remove_suffix(2);

  std::string joined;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find('\n', start);
    if (end == std::string_view::npos) end = s.size();
    std::string_view line = trim(s.substr(start, end - start));
    if (line.starts_with("//")) {
      while (line.starts_with("/")) line.remove_prefix(1);
    } else {
      while (line.starts_with("*")) line.remove_prefix(1);
    }
    joined.append(line);
    joined.push_back(' ');
    start = end + 1;
  }
  return collapse_whitespace(joined);
}

int label(std::string_view comment_before, std::string_view comment_after) {
  return normalize_comment(comment_before) == normalize_comment(comment_after) ? kConsistent
                                                                               : kInconsistent;
}

Category infer_category(std::string_view comment) {
  const auto norm = normalize_comment(comment);
  auto tag_is = [&](std::string_view tag) {
    return norm.starts_with(tag) &&
           (norm.size() == tag.size() ||
            std::isspace(static_cast<unsigned char>(norm[tag.size()])));
  };
  if (tag_is("@return")) return Category::kReturn;
  if (tag_is("@param")) return Category::kParam;
  return Category::kSummary;
}

nlohmann::json to_json(const Example& e) {
  return nlohmann::json{{"id", e.id},
                        {"comment", e.comment},
                        {"method_old", e.method_old},
                        {"method_new", e.method_new},
                        {"category", to_string(e.category)},
                        {"label", e.label},
                        {"split", to_string(e.split)},
                        {"project", e.project}};
}

Example example_from_json(const nlohmann::json& r) {
  Example e;
  e.id = r.at("id").get<std::string>();
  e.comment = r.at("comment").get<std::string>();
  e.method_old = r.at("method_old").get<std::string>();
  e.method_new = r.at("method_new").get<std::string>();
  e.category = parse_category(r.at("category").get<std::string>());
  e.label = r.at("label").get<int>();
  if (e.label != kConsistent && e.label != kInconsistent)
    throw Error("label must be 0 or 1 in record " + e.id);
  e.split = parse_split(r.at("split").get<std::string>());
  e.project = r.value("project", std::string());
  return e;
}

std::string to_json_line(const Example& example) { return to_json(example).dump(); }

void write_examples(const fs::path& path, const std::vector<Example>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& e : examples) out << to_json_line(e) << '\n';
}

std::vector<Example> read_examples(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<Example> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(example_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& ex) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return out;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("COCO_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------
// Published corpus adapter

namespace {

struct SplitFile {
  fs::path path;
  Split split;
  std::optional<Category> category;
};

struct FileResult {
  std::vector<Example> examples;
  std::size_t malformed = 0;
  std::vector<std::string> warnings;
  std::size_t published_edits = 0;
  std::size_t edit_agreements = 0;
};

std::optional<fs::path> find_split_file(const fs::path& dir, Split split) {
  for (const char* ext : {".json", ".jsonl"}) {
    fs::path candidate = dir / (std::string(to_string(split)) + ext);
    if (fs::exists(candidate)) return candidate;
  }
  return std::nullopt;
}

std::optional<fs::path> find_category_dir(const fs::path& dir, Category category) {
  if (!fs::is_directory(dir)) return std::nullopt;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && lower(entry.path().filename().string()) == to_string(category))
      return entry.path();
  }
  return std::nullopt;
}

std::string marker_from_published(const std::string& tok) {
  static const std::map<std::string, std::string_view> kMap = {
      {"<KEEP_END>", markers::kKeepClose},
      {"<INSERT_END>", markers::kInsertClose},
      {"<DELETE_END>", markers::kDeleteClose},
      {"<REPLACE_END>", markers::kReplaceClose}};
  auto it = kMap.find(tok);
  return it == kMap.end() ? tok : std::string(it->second);
}

std::string required_string(const nlohmann::json& r, const char* key) {
  auto it = r.find(key);
  if (it == r.end() || !it->is_string())
    throw IngestError(std::string("missing or non-string field '") + key + "'");
  return it->get<std::string>();
}

void convert_record(const nlohmann::json& record, const SplitFile& file,
                    const std::string& where, FileResult& result) {
  try {
    Example e = example_from_published(record, file.split, file.category);
    auto sub = [&](const char* key) -> std::optional<std::vector<std::string>> {
      auto it = record.find(key);
      if (it == record.end() || !it->is_array()) return std::nullopt;
      return it->get<std::vector<std::string>>();
    };
    if (auto published = sub("span_diff_code_subtokens")) {
      ++result.published_edits;
      auto old_sub = sub("old_code_subtokens");
      auto new_sub = sub("new_code_subtokens");
      if (old_sub && new_sub) {
        std::vector<std::string> theirs;
        theirs.reserve(published->size());
        for (const auto& tok : *published) theirs.push_back(marker_from_published(tok));
        if (flatten(diff(*old_sub, *new_sub)) == theirs) ++result.edit_agreements;
      }
    }
    result.examples.push_back(std::move(e));
  } catch (const std::exception& ex) {
    ++result.malformed;
    result.warnings.push_back(where + ": skipped malformed record: " + ex.what());
  }
}

FileResult parse_split_file(const SplitFile& file) {
  FileResult result;
  std::ifstream in(file.path, std::ios::binary);
  if (!in) throw IngestError("cannot read split file: " + file.path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();

  const auto first = content.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && content[first] == '[') {
    auto doc = nlohmann::json::parse(content, nullptr, /*allow_exceptions=*/false);
    if (!doc.is_discarded()) {
      for (std::size_t k = 0; k < doc.size(); ++k)
        convert_record(doc[k], file, file.path.string() + "[" + std::to_string(k) + "]", result);
      return result;
    }
  }
  std::istringstream lines(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = file.path.string() + ":" + std::to_string(line_no);
    auto record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
      ++result.malformed;
      result.warnings.push_back(where + ": skipped malformed record: not a JSON object");
      continue;
    }
    convert_record(record, file, where, result);
  }
  return result;
}

}  // namespace

Example example_from_published(const nlohmann::json& r, Split split,
                               std::optional<Category> category_hint) {
  if (!r.is_object()) throw IngestError("record is not an object");
  Example e;
  auto id_it = r.find("id");
  if (id_it == r.end()) throw IngestError("missing field 'id'");
  e.id = id_it->is_string() ? id_it->get<std::string>() : id_it->dump();
  e.comment = required_string(r, "old_comment_raw");
  e.method_old = required_string(r, "old_code_raw");
  e.method_new = required_string(r, "new_code_raw");

  auto label_it = r.find("label");
  if (label_it == r.end()) throw IngestError("missing field 'label'");
  if (label_it->is_boolean()) e.label = label_it->get<bool>() ? 1 : 0;
  else if (label_it->is_number_integer()) e.label = label_it->get<int>();
  else throw IngestError("field 'label' is not an integer");
  if (e.label != kConsistent && e.label != kInconsistent)
    throw IngestError("label out of range");

  if (auto ct = r.find("comment_type"); ct != r.end() && ct->is_string())
    e.category = parse_category(ct->get<std::string>());
  else if (category_hint)
    e.category = *category_hint;
  else
    throw IngestError("missing field 'comment_type'");

  e.split = split;
  e.project = r.value("project", std::string());
  return e;
}

IngestReport ingest(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IngestError("not a dataset directory: " + dir.string());

  std::vector<SplitFile> files;
  bool category_layout = false;
  for (auto c : kAllCategories) category_layout |= find_category_dir(dir, c).has_value();
  if (category_layout) {
    for (auto c : kAllCategories) {
      auto cdir = find_category_dir(dir, c);
      for (auto s : kAllSplits) {
        const fs::path base = cdir ? *cdir : dir / std::string(to_string(c));
        auto path = find_split_file(base, s);
        if (!path)
          throw IngestError("missing split file: " +
                            (base / (std::string(to_string(s)) + ".json")).string());
        files.push_back({*path, s, c});
      }
    }
  } else {
    for (auto s : kAllSplits) {
      auto path = find_split_file(dir, s);
      if (!path)
        throw IngestError("missing split file: " +
                          (dir / (std::string(to_string(s)) + ".json")).string());
      files.push_back({*path, s, std::nullopt});
    }
  }

  std::vector<FileResult> results(files.size());
  std::vector<std::exception_ptr> errors(files.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < files.size(); k = next++) {
      try {
        results[k] = parse_split_file(files[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::min(worker_count(), files.size());
  std::vector<std::thread> workers;
  for (std::size_t w = 1; w < n_workers; ++w) workers.emplace_back(work);
  work();
  for (auto& t : workers) t.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);

  IngestReport report;
  for (auto& r : results) {
    report.malformed += r.malformed;
    report.published_edits += r.published_edits;
    report.edit_agreements += r.edit_agreements;
    for (auto& w : r.warnings) {
      spdlog::warn("{}", w);
      report.warnings.push_back(std::move(w));
    }
    std::move(r.examples.begin(), r.examples.end(), std::back_inserter(report.examples));
  }
  std::stable_sort(report.examples.begin(), report.examples.end(),
                   [](const Example& a, const Example& b) { return a.id < b.id; });
  return report;
}

// ---------------------------------------------------------------------------
// Statistics

std::string_view field_name(CorpusStats::Field field) {
  switch (field) {
    case CorpusStats::kComment: return "comment";
    case CorpusStats::kMethodOld: return "method_old";
    case CorpusStats::kMethodNew: return "method_new";
    case CorpusStats::kMethodEdit: return "method_edit";
    default: return "?";
  }
}

double percentile_nearest_rank(std::vector<double> values, int percent) {
  if (values.empty()) throw Error("percentile of an empty list");
  if (percent <= 0 || percent > 100) throw Error("percent must be in (0, 100]");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::size_t rank = (static_cast<std::size_t>(percent) * n + 99) / 100;
  rank = std::clamp<std::size_t>(rank, 1, n);
  return values[rank - 1];
}

std::size_t CorpusStats::count(Category category, Split split) const {
  auto c = counts.find(category);
  if (c == counts.end()) return 0;
  auto s = c->second.find(split);
  return s == c->second.end() ? 0 : s->second;
}

std::size_t CorpusStats::category_total(Category category) const {
  std::size_t total = 0;
  for (auto s : kAllSplits) total += count(category, s);
  return total;
}

std::size_t CorpusStats::split_total(Split split) const {
  std::size_t total = 0;
  for (auto c : kAllCategories) total += count(c, split);
  return total;
}

std::size_t CorpusStats::total() const {
  std::size_t total = 0;
  for (auto c : kAllCategories) total += category_total(c);
  return total;
}

LengthSummary CorpusStats::summary(std::optional<Category> category, Field field) const {
  std::vector<double> values;
  for (const auto& [c, fields] : lengths) {
    if (category && c != *category) continue;
    for (auto v : fields[field]) values.push_back(static_cast<double>(v));
  }
  LengthSummary out;
  out.count = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  out.p98 = percentile_nearest_rank(std::move(values), 98);
  return out;
}

void CorpusStats::merge(const CorpusStats& other) {
  for (const auto& [c, per_split] : other.counts)
    for (const auto& [s, n] : per_split) counts[c][s] += n;
  for (const auto& [c, fields] : other.lengths)
    for (int f = 0; f < kNumFields; ++f)
      lengths[c][f].insert(lengths[c][f].end(), fields[f].begin(), fields[f].end());
}

nlohmann::json CorpusStats::to_json() const {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json counts_json;
  for (auto c : kAllCategories) {
    nlohmann::json row;
    for (auto s : kAllSplits) row[std::string(to_string(s))] = count(c, s);
    row["total"] = category_total(c);
    counts_json[std::string(to_string(c))] = row;
  }
  nlohmann::json full;
  for (auto s : kAllSplits) full[std::string(to_string(s))] = split_total(s);
  full["total"] = total();
  counts_json["full"] = full;

  nlohmann::json lengths_json;
  auto emit = [&](const std::string& key, std::optional<Category> c) {
    nlohmann::json row;
    for (int f = 0; f < kNumFields; ++f) {
      const auto s = summary(c, static_cast<Field>(f));
      row[std::string(field_name(static_cast<Field>(f)))] = {
          {"count", s.count}, {"mean", opt(s.mean)}, {"p98", opt(s.p98)}};
    }
    lengths_json[key] = row;
  };
  for (auto c : kAllCategories) emit(std::string(to_string(c)), c);
  emit("full", std::nullopt);
  return {{"counts", counts_json}, {"lengths", lengths_json}};
}

namespace {

CorpusStats stats_chunk(const std::vector<Example>& examples, std::size_t begin,
                        std::size_t end, const SubwordVocab& vocab) {
  CorpusStats out;
  for (std::size_t k = begin; k < end; ++k) {
    const Example& e = examples[k];
    ++out.counts[e.category][e.split];
    auto& fields = out.lengths[e.category];
    fields[CorpusStats::kComment].push_back(vocab.encode(comment_subtokens(e.comment)).size());
    try {
      const auto old_len = vocab.encode(method_subtokens(e.method_old)).size();
      const auto new_len = vocab.encode(method_subtokens(e.method_new)).size();
      const auto edit_len = vocab.encode(edit_subtokens(e.method_old, e.method_new)).size();
      fields[CorpusStats::kMethodOld].push_back(old_len);
      fields[CorpusStats::kMethodNew].push_back(new_len);
      fields[CorpusStats::kMethodEdit].push_back(edit_len);
    } catch (const LexError& ex) {
      spdlog::warn("{}: method lengths skipped: {}", e.id, ex.what());
    }
  }
  return out;
}

}  // namespace

CorpusStats stats(const std::vector<Example>& examples, const SubwordVocab& vocab) {
  const std::size_t n = examples.size();
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(worker_count(), n / 256 + 1));
  const std::size_t chunk = (n + n_workers - 1) / std::max<std::size_t>(n_workers, 1);
  std::vector<CorpusStats> parts(n_workers);
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < n_workers; ++w) {
    const std::size_t begin = std::min(n, w * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    if (w + 1 == n_workers) {
      parts[w] = stats_chunk(examples, begin, end, vocab);
    } else {
      workers.emplace_back([&, w, begin, end] { parts[w] = stats_chunk(examples, begin, end, vocab); });
    }
  }
  for (auto& t : workers) t.join();
  CorpusStats total;
  for (const auto& p : parts) total.merge(p);
  return total;
}

}  // namespace coco
