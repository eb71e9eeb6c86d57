#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "coco/corpus.hpp"
#include "coco/javadoc.hpp"

namespace coco {

struct MineReport {
  std::vector<Example> examples;  // sorted by id, at most `limit`
  std::vector<std::string> warnings;
  std::size_t commit_pairs = 0;
};

// Walks first-parent history oldest to newest and, for each consecutive
// commit pair, pairs up documented Java methods by name and parameter list.
// Methods whose text changed yield one example per comment section of the
// older version; the label compares that section with its newer version (a
// removed section counts as changed). Files that fail to parse are skipped
// with a warning. Throws when `repo` is not a readable git checkout.
MineReport mine(const std::filesystem::path& repo, std::size_t limit);

// Examples for one changed method. `id_prefix` should identify the commit
// pair and file.
std::vector<Example> examples_for_change(const DocumentedMethod& before,
                                         const DocumentedMethod& after,
                                         const std::string& id_prefix,
                                         const std::string& project);

// Deterministic 80/10/10 split keyed on a hash of the id.
Split split_for_id(const std::string& id);

// git plumbing shared with the pre-commit check.
std::vector<std::string> git_lines(const std::filesystem::path& repo,
                                   const std::vector<std::string>& args);
bool git_show(const std::filesystem::path& repo, const std::string& rev_path, std::string& out);
void require_git_repo(const std::filesystem::path& repo);

}  // namespace coco
