#include <doctest.h>

#include <chrono>

#include "coco/pipeline.hpp"
#include "coco/synthetic.hpp"
#include "support.hpp"

using namespace coco;

namespace {

RunConfig toy_config(const testing::TempDir& dir) {
  write_examples(dir / "toy.jsonl",
                 synthetic_corpus({.examples = 200, .valid_fraction = 0.2, .test_fraction = 0.1}));
  RunConfig rc;
  rc.data = dir / "toy.jsonl";
  rc.out_dir = dir / "run";
  rc.max_len = 64;
  rc.vocab_size = 300;
  rc.encoder.d_model = 16;
  rc.encoder.n_layers = 1;
  rc.encoder.n_heads = 2;
  rc.encoder.d_ffn = 32;
  rc.encoder.dropout_rate = 0.1;
  rc.train.learning_rate = 1e-3;
  rc.train.max_epochs = 3;
  rc.train.seeds = {0, 1};
  rc.bow.dim = 8;
  rc.bow.hidden = 8;
  rc.bow_train.max_epochs = 3;
  return rc;
}

}  // namespace

TEST_CASE("toy pipeline runs end to end and reruns byte-identically") {
  testing::TempDir dir;
  const auto rc = toy_config(dir);
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = run_pipeline(rc);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 300.0);

  for (const char* f : {"vocab.txt", "encoder-seed0.ckpt", "encoder-seed1.ckpt", "svm.model",
                        "bow-seed0.model", "bow-seed1.model", "metrics.json", "report.txt"})
    CHECK_MESSAGE(testing::fs::exists(rc.out_dir / f), f);
  REQUIRE(result.rows.size() == 3);
  CHECK(result.rows[0].model == "TF-IDF SVM");
  CHECK(result.rows[1].model == "BOW");
  CHECK(result.rows[2].model == "Encoder (full)");
  CHECK(result.rows[2].metrics.runs == 2);

  const auto metrics = nlohmann::json::parse(testing::read_text(rc.out_dir / "metrics.json"));
  CHECK(metrics["format_version"] == kFormatVersion);
  CHECK(metrics["run_config"]["mode"] == "posthoc");
  CHECK(metrics["eval_split"] == "test");

  const auto first = testing::read_text(rc.out_dir / "metrics.json");
  const auto first_report = testing::read_text(rc.out_dir / "report.txt");
  run_pipeline(rc);
  CHECK(testing::read_text(rc.out_dir / "metrics.json") == first);
  CHECK(testing::read_text(rc.out_dir / "report.txt") == first_report);
}

TEST_CASE("just-in-time sliding pipeline skips the SVM") {
  testing::TempDir dir;
  auto rc = toy_config(dir);
  rc.mode = InputMode::kJustInTime;
  rc.attention = AttentionMode::kSliding;
  rc.encoder.window = 8;
  rc.train.seeds = {3};
  rc.train.max_epochs = 1;
  const auto result = run_pipeline(rc);
  REQUIRE(result.rows.size() == 2);
  CHECK(result.rows[0].model == "BOW");
  CHECK(result.rows[1].model == "Encoder (sliding)");
  CHECK_FALSE(testing::fs::exists(rc.out_dir / "svm.model"));
}

TEST_CASE("a missing vocabulary halts at the vocab stage") {
  testing::TempDir dir;
  auto rc = toy_config(dir);
  rc.vocab = dir / "absent.txt";
  try {
    run_pipeline(rc);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "vocab");
  }
}

TEST_CASE("invalid configurations halt at the config stage") {
  testing::TempDir dir;
  auto rc = toy_config(dir);
  rc.max_len = 600;
  try {
    run_pipeline(rc);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "config");
  }
  rc.max_len.reset();
  CHECK(rc.resolved_max_len() == 512);
  rc.attention = AttentionMode::kSliding;
  CHECK(rc.resolved_max_len() == 1024);
}

TEST_CASE("run config JSON round trip") {
  testing::TempDir dir;
  auto rc = toy_config(dir);
  rc.scheme = SubwordScheme::kWordPiece;
  const auto back = RunConfig::from_json(rc.to_json());
  CHECK(back.to_json() == rc.to_json());
  const auto env = envelope(rc, {{"x", 1}});
  CHECK(env["format_version"] == kFormatVersion);
  CHECK(env["x"] == 1);
  CHECK(env["run_config"]["scheme"] == "wordpiece");
}
