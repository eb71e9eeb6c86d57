#include "coco/mine.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <spdlog/spdlog.h>

#include "coco/process.hpp"

namespace coco {

std::vector<std::string> git_lines(const std::filesystem::path& repo,
                                   const std::vector<std::string>& args) {
  std::vector<std::string> argv = {"git", "-C", repo.string()};
  argv.insert(argv.end(), args.begin(), args.end());
  const auto r = run_command(argv);
  if (r.status != 0) {
    std::string joined;
    for (const auto& a : args) joined += " " + a;
    throw Error("git" + joined + " failed in " + repo.string());
  }
  std::vector<std::string> lines;
  std::istringstream in(r.out);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) lines.push_back(line);
  return lines;
}

bool git_show(const std::filesystem::path& repo, const std::string& rev_path, std::string& out) {
  const auto r = run_command({"git", "-C", repo.string(), "show", rev_path});
  if (r.status != 0) return false;
  out = r.out;
  return true;
}

void require_git_repo(const std::filesystem::path& repo) {
  if (!std::filesystem::is_directory(repo))
    throw Error("repository not found: " + repo.string());
  const auto r = run_command({"git", "-C", repo.string(), "rev-parse", "--is-inside-work-tree"});
  if (r.status != 0) throw Error("not a readable git repository: " + repo.string());
}

Split split_for_id(const std::string& id) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  const auto bucket = h % 10;
  if (bucket < 8) return Split::kTrain;
  return bucket == 8 ? Split::kValid : Split::kTest;
}

std::vector<Example> examples_for_change(const DocumentedMethod& before,
                                         const DocumentedMethod& after,
                                         const std::string& id_prefix,
                                         const std::string& project) {
  std::vector<Example> out;
  if (before.text == after.text) return out;
  const DocComment old_doc = parse_doc_comment(before.doc);
  const DocComment new_doc = parse_doc_comment(after.doc);

  auto counterpart = [&](const DocComment::Section& s) -> std::string {
    switch (s.category) {
      case Category::kSummary:
        return new_doc.summary;
      case Category::kReturn:
        return new_doc.returns.value_or("");
      case Category::kParam:
        for (const auto& [name, text] : new_doc.params)
          if (name == s.key) return text;
        return "";
    }
    return "";
  };

  for (const auto& s : old_doc.sections()) {
    Example e;
    e.id = id_prefix + ":" + before.key + ":" + std::string(to_string(s.category));
    if (!s.key.empty()) e.id += ":" + s.key;
    e.comment = s.text;
    e.method_old = before.text;
    e.method_new = after.text;
    e.category = s.category;
    e.label = label(s.text, counterpart(s));
    e.split = split_for_id(e.id);
    e.project = project;
    out.push_back(std::move(e));
  }
  return out;
}

MineReport mine(const std::filesystem::path& repo, std::size_t limit) {
  require_git_repo(repo);
  MineReport report;
  std::vector<std::string> commits;
  try {
    commits = git_lines(repo, {"rev-list", "--reverse", "--first-parent", "HEAD"});
  } catch (const Error&) {
    throw Error("cannot read history of " + repo.string());
  }
  const std::string project =
      std::filesystem::weakly_canonical(repo).filename().string();

  auto warn = [&](std::string msg) {
    spdlog::warn("{}", msg);
    report.warnings.push_back(std::move(msg));
  };

  for (std::size_t c = 1; c < commits.size(); ++c) {
    const std::string& parent = commits[c - 1];
    const std::string& child = commits[c];
    ++report.commit_pairs;
    const auto files = git_lines(
        repo, {"diff", "--name-only", "--diff-filter=M", parent, child, "--", "*.java"});
    for (const auto& file : files) {
      std::string old_src, new_src;
      if (!git_show(repo, parent + ":" + file, old_src) ||
          !git_show(repo, child + ":" + file, new_src)) {
        warn("cannot read " + file + " at " + child.substr(0, 12));
        continue;
      }
      std::vector<DocumentedMethod> before, after;
      try {
        before = extract_documented_methods(old_src);
        after = extract_documented_methods(new_src);
      } catch (const ParseError& e) {
        warn("skipping " + file + " at " + child.substr(0, 12) + ": " + e.what());
        continue;
      }
      std::map<std::string, const DocumentedMethod*> by_key;
      for (const auto& m : after) by_key.emplace(m.key, &m);
      const std::string prefix = project + ":" + child.substr(0, 12) + ":" + file;
      for (const auto& m : before) {
        auto it = by_key.find(m.key);
        if (it == by_key.end()) continue;
        auto ex = examples_for_change(m, *it->second, prefix, project);
        report.examples.insert(report.examples.end(), std::make_move_iterator(ex.begin()),
                               std::make_move_iterator(ex.end()));
      }
    }
  }

  std::sort(report.examples.begin(), report.examples.end(),
            [](const Example& a, const Example& b) { return a.id < b.id; });
  report.examples.erase(std::unique(report.examples.begin(), report.examples.end(),
                                    [](const Example& a, const Example& b) { return a.id == b.id; }),
                        report.examples.end());
  if (report.examples.size() > limit) report.examples.resize(limit);
  return report;
}

}  // namespace coco
