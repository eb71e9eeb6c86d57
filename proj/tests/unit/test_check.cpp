#include <doctest.h>

#include "coco/checkpoint.hpp"
#include "coco/pipeline.hpp"
#include "coco/synthetic.hpp"
#include "support.hpp"

using namespace coco;

namespace {

std::string calc(const std::string& expr) {
  return "class Calc {\n"
         "  /**\n"
         "   * Computes the alpha total.\n"
         "   * @return the alpha total\n"
         "   */\n"
         "  public int compute() {\n"
         "    int total = " + expr + ";\n"
         "    return total;\n"
         "  }\n"
         "}\n";
}

// A small just-in-time model trained on the synthetic corpus, shared by all
// cases in this file.
struct Model {
  testing::TempDir dir;
  testing::fs::path ckpt, vocab;

  Model() {
    const auto examples = synthetic_corpus({.examples = 400});
    std::vector<std::vector<std::string>> corpus;
    for (const auto& e : examples) {
      corpus.push_back(comment_subtokens(e.comment));
      corpus.push_back(edit_subtokens(e.method_old, e.method_new));
    }
    const auto v = train_bpe(corpus, 300);
    vocab = dir / "vocab.txt";
    v.save(vocab);
    std::vector<PackedInput> train_set, valid_set;
    for (const auto& e : examples) {
      auto p = pack_jit(e, v, 96);
      p.label = e.label;
      (e.split == Split::kTrain ? train_set : valid_set).push_back(p);
    }
    EncoderConfig ec;
    ec.vocab_size = v.size();
    ec.d_model = 16;
    ec.n_layers = 1;
    ec.n_heads = 2;
    ec.d_ffn = 32;
    ec.max_len = 96;
    ec.dropout_rate = 0.0;
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.micro_batch = 16;
    tc.accumulation_steps = 1;
    tc.max_epochs = 2;
    EncoderCheckpoint ck;
    ck.params = train(train_set, valid_set, tc, ec, 0).best;
    ck.mode = InputMode::kJustInTime;
    ck.max_len = 96;
    ckpt = dir / "enc.ckpt";
    save_checkpoint(ckpt, ck);
  }
};

Model& model() {
  static Model m;
  return m;
}

}  // namespace

TEST_CASE("a changed method with an untouched comment yields one finding") {
  testing::TempDir repo;
  testing::init_repo(repo.path());
  testing::write_text(repo / "src/Calc.java", calc("alphaSize + bravoCount"));
  testing::commit_all(repo.path(), "base");
  testing::write_text(repo / "src/Calc.java", calc("cargoSize + bravoCount"));

  const auto r = run_check(repo.path(), model().ckpt, model().vocab);
  REQUIRE(r.findings.size() == 1);
  const auto& f = r.findings[0];
  CHECK(f.file == "src/Calc.java");
  CHECK(f.method == "compute()");
  CHECK(f.line == 6);
  CHECK(f.score >= 0.0);
  CHECK(f.score <= 1.0);
  CHECK(f.inconsistent == (f.score >= 0.5));
}

TEST_CASE("no pending method changes means no findings") {
  testing::TempDir repo;
  testing::init_repo(repo.path());
  testing::write_text(repo / "Calc.java", calc("alphaSize + bravoCount"));
  testing::commit_all(repo.path(), "base");
  CHECK(run_check(repo.path(), model().ckpt, model().vocab).findings.empty());
  testing::write_text(repo / "Calc.java", calc("alphaSize + bravoCount") + "// trailing note\n");
  CHECK(run_check(repo.path(), model().ckpt, model().vocab).findings.empty());
}

TEST_CASE("an unparsable changed file is skipped with a warning") {
  testing::TempDir repo;
  testing::init_repo(repo.path());
  testing::write_text(repo / "Calc.java", calc("alphaSize + bravoCount"));
  testing::commit_all(repo.path(), "base");
  testing::write_text(repo / "Calc.java", calc("alphaSize + bravoCount") + "/* open");
  const auto r = run_check(repo.path(), model().ckpt, model().vocab);
  CHECK(r.findings.empty());
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("a missing checkpoint asks for training") {
  testing::TempDir repo;
  testing::init_repo(repo.path());
  try {
    run_check(repo.path(), repo / "none.ckpt", model().vocab);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("coco train") != std::string::npos);
  }
}
