#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "coco/corpus.hpp"
#include "coco/packing.hpp"

namespace testing {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "coco-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

inline int sh(const std::string& cmd) {
  const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

inline std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

inline void git(const fs::path& repo, const std::string& args) {
  const int rc = sh("git -C " + q(repo) +
                    " -c user.name=t -c user.email=t@example.com -c commit.gpgsign=false " + args);
  if (rc != 0) throw std::runtime_error("git " + args + " failed");
}

inline void init_repo(const fs::path& repo) {
  fs::create_directories(repo);
  git(repo, "init -q");
}

inline void commit_all(const fs::path& repo, const std::string& message) {
  git(repo, "add -A");
  git(repo, "commit -q -m '" + message + "'");
}

// Random sequence over a small alphabet so that diffs have real overlap.
inline std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t max_len,
                                              std::size_t alphabet) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> sym(0, alphabet - 1);
  std::vector<std::string> out(len(rng));
  for (auto& t : out) t = "t" + std::to_string(sym(rng));
  return out;
}

// Packed input with random ids in [4, vocab), comment/code split at `split`.
inline coco::PackedInput random_input(std::mt19937_64& rng, std::size_t vocab,
                                      std::size_t comment, std::size_t code, int label) {
  std::uniform_int_distribution<coco::PieceId> id(4, static_cast<coco::PieceId>(vocab - 1));
  std::vector<coco::PieceId> c(comment), m(code);
  for (auto& v : c) v = id(rng);
  for (auto& v : m) v = id(rng);
  auto p = coco::pack(c, m, 4096);
  p.label = label;
  return p;
}

}  // namespace testing
