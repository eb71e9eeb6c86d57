#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "coco/error.hpp"

namespace coco {

class SubwordVocab;

enum class Category { kReturn, kParam, kSummary };
enum class Split { kTrain, kValid, kTest };

inline constexpr int kConsistent = 0;
inline constexpr int kInconsistent = 1;

std::string_view to_string(Category category);
std::string_view to_string(Split split);
Category parse_category(std::string_view text);
Split parse_split(std::string_view text);

inline constexpr Category kAllCategories[] = {Category::kReturn, Category::kParam,
                                              Category::kSummary};
inline constexpr Split kAllSplits[] = {Split::kTrain, Split::kValid, Split::kTest};

// One labeled comment/method record: the comment as it stood before the
// change, both method versions, and whether the developer had to update the
// comment (1 = inconsistent).
struct Example {
  std::string id;
  std::string comment;
  std::string method_old;
  std::string method_new;
  Category category = Category::kSummary;
  int label = kConsistent;
  Split split = Split::kTrain;
  std::string project;

  friend bool operator==(const Example&, const Example&) = default;
};

// Strips comment delimiters, collapses internal whitespace and trims.
std::string normalize_comment(std::string_view comment);

// 1 iff the normalized comments differ.
int label(std::string_view comment_before, std::string_view comment_after);

// "@return ..." -> return, "@param ..." -> param, anything else -> summary.
Category infer_category(std::string_view comment);

// Canonical line format: one JSON object per line with exactly the fields
// id, comment, method_old, method_new, category, label, split, project.
nlohmann::json to_json(const Example& example);
Example example_from_json(const nlohmann::json& record);
std::string to_json_line(const Example& example);

void write_examples(const std::filesystem::path& path, const std::vector<Example>& examples);
std::vector<Example> read_examples(const std::filesystem::path& path);

class IngestError : public Error {
 public:
  using Error::Error;
};

struct IngestReport {
  std::vector<Example> examples;  // sorted by id
  std::size_t malformed = 0;
  std::vector<std::string> warnings;
  // Records that shipped a precomputed span-diff sequence, and how many of
  // those our diff reproduced token for token.
  std::size_t published_edits = 0;
  std::size_t edit_agreements = 0;
};

// Reads the published corpus. Accepted layouts, checked in order:
//   DIR/{Return,Param,Summary}/{train,valid,test}.json
//   DIR/{train,valid,test}.json   (category from each record's comment_type)
// Each file is either a JSON array or JSON lines. A missing split file is a
// fatal IngestError naming the file; malformed records are skipped, counted
// and logged. Files are parsed in parallel (COCO_THREADS caps the workers);
// output order is by id regardless.
IngestReport ingest(const std::filesystem::path& dir);

// Converts one published record. Throws IngestError when required fields are
// missing or of the wrong type.
Example example_from_published(const nlohmann::json& record, Split split,
                               std::optional<Category> category_hint);

// Worker count for parallel stages: COCO_THREADS when set, else hardware.
std::size_t worker_count();

struct LengthSummary {
  std::size_t count = 0;
  std::optional<double> mean;
  std::optional<double> p98;
};

// Counts and subword lengths. Merging is concatenation of raw length lists,
// so partial stats over disjoint streams combine associatively.
struct CorpusStats {
  enum Field { kComment = 0, kMethodOld, kMethodNew, kMethodEdit, kNumFields };

  // counts[category][split]
  std::map<Category, std::map<Split, std::size_t>> counts;
  // lengths[category][field], raw per-example values.
  std::map<Category, std::array<std::vector<std::size_t>, kNumFields>> lengths;

  std::size_t count(Category category, Split split) const;
  std::size_t category_total(Category category) const;
  std::size_t split_total(Split split) const;
  std::size_t total() const;

  LengthSummary summary(std::optional<Category> category, Field field) const;

  void merge(const CorpusStats& other);
  nlohmann::json to_json() const;
};

std::string_view field_name(CorpusStats::Field field);

// Element ceil(percent/100 * n) (1-indexed) of the sorted values.
double percentile_nearest_rank(std::vector<double> values, int percent);

CorpusStats stats(const std::vector<Example>& examples, const SubwordVocab& vocab);

}  // namespace coco
