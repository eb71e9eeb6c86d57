#include "coco/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>

#include "coco/error.hpp"
#include "coco/packing.hpp"

namespace coco {
namespace {

const std::vector<std::string> kPool = {
    "alpha",  "bravo",  "cargo",  "delta",  "ember",  "fable",  "gamma",  "harbor",
    "igloo",  "jungle", "karma",  "lemon",  "mango",  "nectar", "orbit",  "pepper",
    "quartz", "raven",  "salmon", "tango",  "umbra",  "velvet", "walrus", "xenon",
    "yodel",  "zephyr", "anchor", "bishop", "cobalt", "dingo",  "falcon", "glacier",
    "hazel",  "ivory",  "jasper", "kettle", "lotus",  "marble", "nimbus", "onyx",
    "parrot", "quill",  "ribbon", "saddle", "tundra", "urchin", "violet", "willow",
    "yarrow", "zinnia", "acorn",  "badger", "canyon", "dahlia", "easel",  "ferret",
    "garnet", "heron",  "island", "juniper", "kiwi",  "lagoon", "meadow", "nutmeg"};

const std::vector<std::string> kVerbs = {"compute", "update", "resolve", "merge", "scan"};
const std::vector<std::string> kSuffixes = {"Size", "Count", "Limit", "Offset", "Weight"};
const std::vector<std::string> kLocals = {"total", "result", "acc", "sum"};

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

std::string render_method(const std::string& verb, const std::string& local,
                          const std::vector<std::string>& kws,
                          const std::vector<std::string>& suffixes, char op) {
  std::string body = "public int " + verb + "() {\n  int " + local + " = ";
  for (std::size_t k = 0; k < kws.size(); ++k) {
    if (k > 0) body += std::string(" ") + op + " ";
    body += kws[k] + suffixes[k];
  }
  body += ";\n  return " + local + ";\n}";
  return body;
}

std::string render_comment(Category cat, const std::string& kw, std::mt19937_64& rng) {
  switch (cat) {
    case Category::kReturn:
      return "@return the " + kw + " " + pick(kLocals, rng);
    case Category::kParam:
      return "@param " + kw + "Limit the upper bound";
    case Category::kSummary:
      break;
  }
  return capitalize(pick(kVerbs, rng)) + "s the " + kw + " " + pick(kLocals, rng) + ".";
}

}  // namespace

const std::vector<std::string>& synthetic_keywords(std::size_t count) {
  static std::vector<std::vector<std::string>> cache = [] {
    std::vector<std::vector<std::string>> c(kPool.size() + 1);
    for (std::size_t n = 0; n <= kPool.size(); ++n) c[n].assign(kPool.begin(), kPool.begin() + n);
    return c;
  }();
  if (count > kPool.size()) throw Error("at most 64 synthetic keywords are available");
  return cache[count];
}

std::vector<Example> synthetic_corpus(const SyntheticOptions& o) {
  if (o.keywords < 2 || o.keywords > kPool.size())
    throw Error("synthetic keywords must be in [2, 64]");
  if (o.code_keywords == 0 || o.code_keywords >= o.keywords)
    throw Error("code_keywords must be in [1, keywords)");
  if (o.code_keywords > kSuffixes.size()) throw Error("at most 5 keywords per method");
  if (o.valid_fraction < 0 || o.test_fraction < 0 || o.valid_fraction + o.test_fraction >= 1)
    throw Error("split fractions must leave a training share");

  const auto& pool = synthetic_keywords(o.keywords);
  std::mt19937_64 rng(o.seed);
  const std::size_t n_test = static_cast<std::size_t>(o.test_fraction * double(o.examples));
  const std::size_t n_valid = static_cast<std::size_t>(o.valid_fraction * double(o.examples));
  const std::size_t n_train = o.examples - n_valid - n_test;

  std::vector<Example> out;
  out.reserve(o.examples);
  for (std::size_t i = 0; i < o.examples; ++i) {
    Example e;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%06zu", i);
    e.id = id;
    e.project = "synthetic";
    e.split = i < n_train ? Split::kTrain : i < n_train + n_valid ? Split::kValid : Split::kTest;
    e.category = kAllCategories[std::uniform_int_distribution<int>(0, 2)(rng)];
    e.label = std::bernoulli_distribution(0.5)(rng) ? kInconsistent : kConsistent;

    const std::string& kw = pick(pool, rng);
    std::vector<std::string> others;
    for (const auto& k : pool)
      if (k != kw) others.push_back(k);
    std::shuffle(others.begin(), others.end(), rng);
    std::vector<std::string> code(others.begin(),
                                  others.begin() + static_cast<std::ptrdiff_t>(o.code_keywords));
    const std::size_t slot =
        std::uniform_int_distribution<std::size_t>(0, o.code_keywords - 1)(rng);
    std::vector<std::string> old_code = code;
    old_code[slot] = kw;
    if (e.label == kConsistent) code[slot] = kw;

    std::vector<std::string> suffixes(o.code_keywords);
    for (auto& s : suffixes) s = pick(kSuffixes, rng);
    const std::string verb = pick(kVerbs, rng);
    const std::string local = pick(kLocals, rng);
    e.comment = render_comment(e.category, kw, rng);
    e.method_new = render_method(verb, local, code, suffixes, '+');
    // Consistent pairs still change the method, just not the named keyword.
    e.method_old = render_method(verb, local, old_code, suffixes,
                                 e.label == kConsistent ? '-' : '+');
    out.push_back(std::move(e));
  }
  return out;
}

std::size_t keyword_overlap(const Example& example, std::size_t keywords) {
  const auto& pool = synthetic_keywords(keywords);
  const std::set<std::string> in_pool(pool.begin(), pool.end());
  const auto c = comment_subtokens(example.comment);
  const auto m = method_subtokens(example.method_new);
  std::set<std::string> a, b;
  for (const auto& t : c)
    if (in_pool.count(t)) a.insert(t);
  for (const auto& t : m)
    if (in_pool.count(t)) b.insert(t);
  std::size_t n = 0;
  for (const auto& t : a) n += b.count(t);
  return n;
}

int linear_oracle(const Example& example, std::size_t keywords) {
  const double decision = 0.5 - static_cast<double>(keyword_overlap(example, keywords));
  return decision >= 0.0 ? kInconsistent : kConsistent;
}

}  // namespace coco
