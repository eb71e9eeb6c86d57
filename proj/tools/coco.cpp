// coco: command-line front end for comment/code inconsistency detection.
//
// Exit status: 0 success, 1 findings present (check), 2 usage error,
// 3 runtime error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "coco/baselines.hpp"
#include "coco/checkpoint.hpp"
#include "coco/codelex.hpp"
#include "coco/corpus.hpp"
#include "coco/editseq.hpp"
#include "coco/encoder.hpp"
#include "coco/evalreport.hpp"
#include "coco/mine.hpp"
#include "coco/packing.hpp"
#include "coco/pipeline.hpp"
#include "coco/subword.hpp"
#include "coco/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFindings = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw coco::Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw coco::Error("cannot write " + path.string());
  os << text;
}

// Flags shared by every command. Anything set on the command line overrides
// the optional --config file.
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> attention;
  std::optional<std::size_t> max_len;
  std::optional<std::string> scheme;
  std::optional<std::size_t> vocab_size;

  std::optional<double> lr;
  std::optional<std::size_t> micro_batch, accumulation, epochs, patience;
  bool any_batch = false;
  std::optional<std::size_t> d_model, layers, heads, d_ffn, window;
  std::optional<double> dropout;
  bool no_segments = false;
  bool no_global_cls = false;
  bool no_baselines = false;

  void add_core(CLI::App* app) {
    app->add_option("--config", config, "JSON run configuration");
    app->add_option("--seed", seed, "Random seed");
  }
  void add_mode(CLI::App* app) {
    app->add_option("--mode", mode, "posthoc or jit")->check(CLI::IsMember({"posthoc", "jit"}));
    app->add_option("--max-len", max_len, "Maximum packed length");
  }
  void add_model(CLI::App* app) {
    app->add_option("--attention", attention, "full or sliding")
        ->check(CLI::IsMember({"full", "sliding"}));
    app->add_option("--lr", lr, "Learning rate");
    app->add_option("--micro-batch", micro_batch, "Micro-batch size");
    app->add_option("--accumulation", accumulation, "Gradient accumulation steps");
    app->add_option("--epochs", epochs, "Maximum epochs");
    app->add_option("--patience", patience, "Early-stopping patience in epochs");
    app->add_flag("--any-batch", any_batch, "Allow effective batches outside {16, 32, 64}");
    app->add_option("--d-model", d_model, "Hidden size");
    app->add_option("--layers", layers, "Encoder layers");
    app->add_option("--heads", heads, "Attention heads");
    app->add_option("--d-ffn", d_ffn, "Feed-forward size");
    app->add_option("--window", window, "Sliding attention half-width");
    app->add_option("--dropout", dropout, "Dropout rate");
    app->add_flag("--no-segments", no_segments, "Disable segment embeddings");
    app->add_flag("--no-global-cls", no_global_cls, "Sliding mode: [CLS] attends locally only");
  }

  coco::RunConfig resolve() const {
    coco::RunConfig rc;
    if (!config.empty()) rc = coco::RunConfig::from_json(json::parse(read_file(config)));
    if (mode) rc.mode = coco::parse_mode(*mode);
    if (attention) rc.attention = coco::parse_attention_mode(*attention);
    if (max_len) rc.max_len = *max_len;
    if (scheme) rc.scheme = coco::parse_scheme(*scheme);
    if (vocab_size) rc.vocab_size = *vocab_size;
    if (seed) rc.train.seeds = {*seed};
    if (lr) rc.train.learning_rate = *lr;
    if (micro_batch) rc.train.micro_batch = *micro_batch;
    if (accumulation) rc.train.accumulation_steps = *accumulation;
    if (epochs) rc.train.max_epochs = *epochs;
    if (patience) rc.train.patience = *patience;
    if (any_batch) rc.train.require_standard_batch = false;
    if (d_model) rc.encoder.d_model = *d_model;
    if (layers) rc.encoder.n_layers = *layers;
    if (heads) rc.encoder.n_heads = *heads;
    if (d_ffn) rc.encoder.d_ffn = *d_ffn;
    if (window) rc.encoder.window = *window;
    if (dropout) rc.encoder.dropout_rate = *dropout;
    if (no_segments) rc.encoder.use_segment_embeddings = false;
    if (no_global_cls) rc.encoder.global_cls = false;
    if (no_baselines) rc.baselines = false;
    return rc;
  }
};

// Outputs about a trained model echo the configuration it was trained with.
coco::RunConfig trained_config(const coco::EncoderCheckpoint& ckpt,
                               const coco::RunConfig& fallback) {
  if (!ckpt.extra.is_object() || !ckpt.extra.contains("run_config")) return fallback;
  return coco::RunConfig::from_json(ckpt.extra.at("run_config"));
}

std::vector<coco::Example> select_split(std::vector<coco::Example> all,
                                        const std::string& split) {
  if (split == "all") return all;
  const coco::Split want = coco::parse_split(split);
  std::vector<coco::Example> out;
  for (auto& e : all)
    if (e.split == want) out.push_back(std::move(e));
  return out;
}

std::vector<coco::PackedInput> pack_all(const std::vector<coco::Example>& examples,
                                        const coco::SubwordVocab& vocab, coco::InputMode mode,
                                        std::size_t max_len) {
  std::vector<coco::PackedInput> out;
  out.reserve(examples.size());
  for (const auto& e : examples) {
    try {
      out.push_back(coco::pack_example(e, vocab, mode, max_len));
    } catch (const coco::LexError& err) {
      spdlog::warn("skipping {}: {}", e.id, err.what());
    }
  }
  return out;
}

std::vector<std::vector<std::string>> vocab_corpus(const std::vector<coco::Example>& examples) {
  std::vector<std::vector<std::string>> corpus;
  for (const auto& e : examples) {
    corpus.push_back(coco::comment_subtokens(e.comment));
    try {
      corpus.push_back(coco::method_subtokens(e.method_old));
      corpus.push_back(coco::method_subtokens(e.method_new));
    } catch (const coco::LexError& err) {
      spdlog::warn("vocab: skipping methods of {}: {}", e.id, err.what());
    }
  }
  return corpus;
}

// Scores with a checkpoint; input is canonical when a vocab is given,
// packed JSONL otherwise.
std::vector<coco::PackedInput> load_inputs(const fs::path& in, const std::string& vocab,
                                           coco::InputMode mode, std::size_t max_len,
                                           const std::string& split) {
  if (vocab.empty()) return coco::read_packed(in);
  const auto v = coco::SubwordVocab::load(vocab);
  return pack_all(select_split(coco::read_examples(in), split), v, mode, max_len);
}

json metrics_from(const std::vector<coco::Prediction>& preds,
                  const std::vector<coco::PackedInput>& inputs) {
  std::vector<int> p, y;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (!inputs[k].label) throw coco::Error("input " + inputs[k].id + " has no label");
    p.push_back(preds[k].label);
    y.push_back(*inputs[k].label);
  }
  return coco::compute(p, y).to_json();
}

// Collects (model, metrics) entries from eval outputs or pipeline metrics.
void collect_runs(const json& doc, std::map<std::string, std::vector<coco::Metrics>>& by_model,
                  std::vector<std::string>& order) {
  auto add = [&](const json& entry) {
    const std::string model = entry.at("model").get<std::string>();
    const json& m = entry.at("metrics");
    const auto metrics = coco::from_counts(m.at("tp").get<std::size_t>(), m.at("fp").get<std::size_t>(),
                                           m.at("fn").get<std::size_t>(), m.at("tn").get<std::size_t>());
    if (!by_model.count(model)) order.push_back(model);
    by_model[model].push_back(metrics);
  };
  if (doc.contains("runs"))
    for (const auto& r : doc.at("runs")) add(r);
  else
    add(doc);
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("coco"));
  spdlog::set_pattern("%^%l%$: %v");

  CLI::App app{"Detect inconsistencies between code comments and the methods they describe"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress");

  Common common;
  std::string in_path, out_path, vocab_path, ckpt_path, repo_path, split = "train";
  std::string report_path;

  auto* ingest_cmd = app.add_subcommand("ingest", "Convert the published corpus to canonical JSONL");
  common.add_core(ingest_cmd);
  ingest_cmd->add_option("--in", in_path, "Dataset directory")->required();
  ingest_cmd->add_option("--out", out_path, "Canonical JSONL output")->required();
  ingest_cmd->add_option("--report", report_path, "Ingestion report (JSON)");

  std::size_t limit = 1000000;
  auto* mine_cmd = app.add_subcommand("mine", "Mine examples from git history");
  common.add_core(mine_cmd);
  mine_cmd->add_option("--repo", repo_path, "Git checkout")->required();
  mine_cmd->add_option("--out", out_path, "Canonical JSONL output")->required();
  mine_cmd->add_option("--limit", limit, "Maximum examples");

  auto* stats_cmd = app.add_subcommand("stats", "Corpus counts and subword lengths");
  common.add_core(stats_cmd);
  stats_cmd->add_option("--in", in_path, "Canonical JSONL")->required();
  stats_cmd->add_option("--vocab", vocab_path, "Vocab file")->required();
  stats_cmd->add_option("--out", out_path, "Metrics JSON (default stdout)");

  std::string lex_mode = "code";
  auto* lex_cmd = app.add_subcommand("lex", "Print tokens one per line");
  common.add_core(lex_cmd);
  lex_cmd->add_option("--in", in_path, "Source or comment file")->required();
  lex_cmd->add_option("--mode", lex_mode, "code or comment")
      ->check(CLI::IsMember({"code", "comment"}));

  std::string old_path, new_path;
  bool flat = false;
  auto* diff_cmd = app.add_subcommand("diff", "Token-level edit sequence between two methods");
  common.add_core(diff_cmd);
  diff_cmd->add_option("--old", old_path, "Old method")->required();
  diff_cmd->add_option("--new", new_path, "New method")->required();
  diff_cmd->add_flag("--flat", flat, "Print the flat marker sequence");

  std::string scheme = "bpe";
  std::size_t size = 8000;
  auto* vocab_cmd = app.add_subcommand("vocab", "Train a subword vocabulary");
  common.add_core(vocab_cmd);
  vocab_cmd->add_option("--scheme", scheme, "bpe or wordpiece")
      ->check(CLI::IsMember({"bpe", "wordpiece"}));
  vocab_cmd->add_option("--in", in_path, "Canonical JSONL")->required();
  vocab_cmd->add_option("--size", size, "Target vocabulary size");
  vocab_cmd->add_option("--out", out_path, "Vocab file")->required();
  vocab_cmd->add_option("--split", split, "train, valid, test or all");

  auto* pack_cmd = app.add_subcommand("pack", "Pack examples into classifier inputs");
  common.add_core(pack_cmd);
  common.add_mode(pack_cmd);
  pack_cmd->add_option("--in", in_path, "Canonical JSONL")->required();
  pack_cmd->add_option("--vocab", vocab_path, "Vocab file")->required();
  pack_cmd->add_option("--out", out_path, "Packed JSONL")->required();
  pack_cmd->add_option("--split", split, "train, valid, test or all");

  std::string history_path;
  auto* train_cmd = app.add_subcommand("train", "Train the encoder on one seed");
  common.add_core(train_cmd);
  common.add_mode(train_cmd);
  common.add_model(train_cmd);
  train_cmd->add_option("--in", in_path, "Canonical JSONL with train and valid splits")->required();
  train_cmd->add_option("--vocab", vocab_path, "Vocab file")->required();
  train_cmd->add_option("--out", out_path, "Checkpoint path")->required();
  train_cmd->add_option("--history", history_path, "Per-epoch history (JSON)");

  auto* predict_cmd = app.add_subcommand("predict", "Score inputs with a checkpoint");
  common.add_core(predict_cmd);
  predict_cmd->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  predict_cmd->add_option("--in", in_path, "Packed JSONL, or canonical JSONL with --vocab")
      ->required();
  predict_cmd->add_option("--vocab", vocab_path, "Vocab file (input is canonical)");
  predict_cmd->add_option("--split", split, "Split to score for canonical input");
  predict_cmd->add_option("--out", out_path, "Predictions JSONL (default stdout)");

  std::string model_name;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  common.add_core(eval_cmd);
  eval_cmd->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  eval_cmd->add_option("--in", in_path, "Packed JSONL, or canonical JSONL with --vocab")
      ->required();
  eval_cmd->add_option("--vocab", vocab_path, "Vocab file (input is canonical)");
  eval_cmd->add_option("--split", split, "Split to evaluate for canonical input");
  eval_cmd->add_option("--model", model_name, "Row name for report");
  eval_cmd->add_option("--out", out_path, "Metrics JSON (default stdout)");

  std::string kind = "bow";
  auto* baseline_cmd = app.add_subcommand("baseline", "Train and evaluate a baseline");
  common.add_core(baseline_cmd);
  common.add_mode(baseline_cmd);
  baseline_cmd->add_option("--kind", kind, "svm or bow")->check(CLI::IsMember({"svm", "bow"}));
  baseline_cmd->add_option("--in", in_path, "Canonical JSONL")->required();
  baseline_cmd->add_option("--vocab", vocab_path, "Vocab file (bow)");
  baseline_cmd->add_option("--model-out", ckpt_path, "Model file");
  baseline_cmd->add_option("--eval-split", split, "Split to evaluate on");
  baseline_cmd->add_option("--out", out_path, "Metrics JSON (default stdout)");

  std::vector<std::string> report_inputs;
  std::string report_json_path;
  auto* report_cmd = app.add_subcommand("report", "Aggregate metrics into a results table");
  common.add_core(report_cmd);
  report_cmd->add_option("--in", report_inputs, "eval or pipeline metrics JSON files")
      ->required();
  report_cmd->add_option("--out", out_path, "Table (default stdout)");
  report_cmd->add_option("--json", report_json_path, "Structured report");

  bool check_json = false;
  auto* check_cmd = app.add_subcommand("check", "Flag comments made stale by pending changes");
  common.add_core(check_cmd);
  check_cmd->add_option("--repo", repo_path, "Git checkout")->required();
  check_cmd->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  check_cmd->add_option("--vocab", vocab_path, "Vocab file")->required();
  check_cmd->add_flag("--json", check_json, "Emit findings as JSON");

  coco::SyntheticOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a labeled keyword-overlap toy corpus");
  common.add_core(synth_cmd);
  synth_cmd->add_option("--out", out_path, "Canonical JSONL output")->required();
  synth_cmd->add_option("--examples", synth.examples, "Number of examples");
  synth_cmd->add_option("--keywords", synth.keywords, "Keyword pool size (2-64)");
  synth_cmd->add_option("--code-keywords", synth.code_keywords, "Keywords per method");
  synth_cmd->add_option("--valid-fraction", synth.valid_fraction, "Share of valid examples");
  synth_cmd->add_option("--test-fraction", synth.test_fraction, "Share of test examples");

  std::string data_path;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "ingest, vocab, pack, train, eval, report");
  common.add_core(pipeline_cmd);
  common.add_mode(pipeline_cmd);
  common.add_model(pipeline_cmd);
  pipeline_cmd->add_option("--data", data_path, "Corpus directory or canonical JSONL");
  pipeline_cmd->add_option("--out-dir", out_path, "Artifact directory");
  pipeline_cmd->add_option("--vocab", vocab_path, "Existing vocab (skips vocab training)");
  pipeline_cmd->add_option("--scheme", common.scheme, "bpe or wordpiece")
      ->check(CLI::IsMember({"bpe", "wordpiece"}));
  pipeline_cmd->add_option("--vocab-size", common.vocab_size, "Target vocabulary size");
  std::vector<std::uint64_t> seeds;
  pipeline_cmd->add_option("--seed-list", seeds, "Seeds to train (default from config)");
  pipeline_cmd->add_flag("--no-baselines", common.no_baselines, "Skip the baselines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  try {
    coco::RunConfig rc = common.resolve();

    if (*ingest_cmd) {
      const auto report = coco::ingest(in_path);
      coco::write_examples(out_path, report.examples);
      std::fprintf(stderr, "ingested %zu examples (%zu malformed skipped)\n",
                   report.examples.size(), report.malformed);
      if (!report_path.empty()) {
        json payload = {{"examples", report.examples.size()},
                        {"malformed", report.malformed},
                        {"warnings", report.warnings},
                        {"published_edits", report.published_edits},
                        {"edit_agreements", report.edit_agreements}};
        write_file(report_path, coco::envelope(rc, payload).dump(2) + "\n");
      }
      return kExitOk;
    }

    if (*synth_cmd) {
      if (common.seed) synth.seed = *common.seed;
      coco::write_examples(out_path, coco::synthetic_corpus(synth));
      return kExitOk;
    }

    if (*mine_cmd) {
      const auto report = coco::mine(repo_path, limit);
      coco::write_examples(out_path, report.examples);
      std::fprintf(stderr, "mined %zu examples from %zu commit pairs\n", report.examples.size(),
                   report.commit_pairs);
      return kExitOk;
    }

    if (*stats_cmd) {
      const auto examples = coco::read_examples(in_path);
      const auto vocab = coco::SubwordVocab::load(vocab_path);
      const auto s = coco::stats(examples, vocab);
      write_file(out_path, coco::envelope(rc, {{"stats", s.to_json()}}).dump(2) + "\n");
      return kExitOk;
    }

    if (*lex_cmd) {
      const std::string text = read_file(in_path);
      const auto tokens = lex_mode == "code" ? coco::lex_code(text) : coco::lex_comment(text);
      for (const auto& t : tokens) std::cout << t.text << '\t' << coco::to_string(t.kind) << '\n';
      return kExitOk;
    }

    if (*diff_cmd) {
      const auto edit =
          coco::diff(coco::lex_code(read_file(old_path)), coco::lex_code(read_file(new_path)));
      if (flat) {
        const auto tokens = coco::flatten(edit);
        for (std::size_t k = 0; k < tokens.size(); ++k)
          std::cout << (k ? " " : "") << tokens[k];
        std::cout << '\n';
        return kExitOk;
      }
      auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (const auto& t : v) s += (s.empty() ? "" : " ") + t;
        return s;
      };
      for (const auto& span : edit.spans) {
        std::cout << coco::to_string(span.action) << ": ";
        switch (span.action) {
          case coco::EditAction::kInsert:
            std::cout << join(span.new_tokens);
            break;
          case coco::EditAction::kReplace:
            std::cout << join(span.old_tokens) << " -> " << join(span.new_tokens);
            break;
          default:
            std::cout << join(span.old_tokens);
        }
        std::cout << '\n';
      }
      return kExitOk;
    }

    if (*vocab_cmd) {
      const auto examples = select_split(coco::read_examples(in_path), split);
      const auto vocab = coco::train_vocab(coco::parse_scheme(scheme), vocab_corpus(examples), size);
      vocab.save(out_path);
      if (vocab.exhausted())
        std::fprintf(stderr, "merges exhausted at %zu pieces (target %zu)\n", vocab.size(), size);
      return kExitOk;
    }

    if (*pack_cmd) {
      const auto vocab = coco::SubwordVocab::load(vocab_path);
      const auto inputs = pack_all(select_split(coco::read_examples(in_path), split), vocab,
                                   rc.mode, rc.resolved_max_len());
      coco::write_packed(out_path, inputs);
      return kExitOk;
    }

    if (*train_cmd) {
      const auto vocab = coco::SubwordVocab::load(vocab_path);
      const auto all = coco::read_examples(in_path);
      const auto train_set = pack_all(select_split(all, "train"), vocab, rc.mode,
                                      rc.resolved_max_len());
      const auto valid_set = pack_all(select_split(all, "valid"), vocab, rc.mode,
                                      rc.resolved_max_len());
      rc.validate();
      const std::uint64_t seed = rc.train.seeds.front();
      const auto result = coco::train(train_set, valid_set, rc.train,
                                      rc.resolved_encoder(vocab.size()), seed,
                                      [](const coco::EpochRecord& r) {
                                        spdlog::info("epoch {} loss {:.4f} valid F1 {}", r.epoch,
                                                     r.train_loss, coco::format_percent(r.valid.f1));
                                      });
      coco::EncoderCheckpoint ckpt{result.best, rc.mode, rc.resolved_max_len(),
                                   {{"seed", seed}, {"run_config", rc.to_json()}}};
      coco::save_checkpoint(out_path, ckpt);
      if (!history_path.empty())
        write_file(history_path, coco::envelope(rc, result.history_json()).dump(2) + "\n");
      return kExitOk;
    }

    if (*predict_cmd || *eval_cmd) {
      const auto ckpt = coco::load_checkpoint(ckpt_path);
      if (*predict_cmd && !predict_cmd->get_option("--split")->count()) split = "all";
      if (*eval_cmd && !eval_cmd->get_option("--split")->count()) split = "test";
      const auto inputs = load_inputs(in_path, vocab_path, ckpt.mode, ckpt.max_len, split);
      const auto preds = coco::predict(ckpt.params, inputs);
      if (*predict_cmd) {
        std::string out;
        for (std::size_t k = 0; k < inputs.size(); ++k)
          out += json{{"id", inputs[k].id}, {"score", preds[k].score}, {"label", preds[k].label}}
                     .dump() +
                 "\n";
        write_file(out_path, out);
        return kExitOk;
      }
      if (model_name.empty()) model_name = "encoder";
      json payload = {{"model", model_name}, {"metrics", metrics_from(preds, inputs)}};
      write_file(out_path, coco::envelope(trained_config(ckpt, rc), payload).dump(2) + "\n");
      return kExitOk;
    }

    if (*baseline_cmd) {
      const auto all = coco::read_examples(in_path);
      if (!baseline_cmd->get_option("--eval-split")->count()) split = "test";
      json payload;
      if (kind == "svm") {
        const auto model =
            coco::tfidf_train(select_split(all, "train"), rc.mode, rc.svm);
        if (!ckpt_path.empty()) model.save(ckpt_path);
        std::vector<int> p, y;
        for (const auto& e : select_split(all, split)) {
          p.push_back(coco::tfidf_predict(model, e));
          y.push_back(e.label);
        }
        payload = {{"model", "TF-IDF SVM"}, {"metrics", coco::compute(p, y).to_json()}};
      } else {
        if (vocab_path.empty()) throw coco::Error("--vocab is required for the bow baseline");
        const auto vocab = coco::SubwordVocab::load(vocab_path);
        const std::size_t max_len = rc.resolved_max_len();
        const auto train_set = pack_all(select_split(all, "train"), vocab, rc.mode, max_len);
        const auto valid_set = pack_all(select_split(all, "valid"), vocab, rc.mode, max_len);
        const auto eval_set = pack_all(select_split(all, split), vocab, rc.mode, max_len);
        coco::BowConfig bc = rc.bow;
        bc.vocab_size = vocab.size();
        const auto result =
            coco::bow_train(train_set, valid_set, bc, rc.bow_train, rc.train.seeds.front());
        if (!ckpt_path.empty()) result.best.save(ckpt_path, rc.mode, max_len);
        payload = {{"model", "BOW"},
                   {"metrics", metrics_from(coco::bow_predict(result.best, eval_set), eval_set)}};
      }
      write_file(out_path, coco::envelope(rc, payload).dump(2) + "\n");
      return kExitOk;
    }

    if (*report_cmd) {
      std::map<std::string, std::vector<coco::Metrics>> by_model;
      std::vector<std::string> order;
      for (const auto& path : report_inputs) collect_runs(json::parse(read_file(path)), by_model, order);
      std::vector<coco::ReportRow> rows;
      for (const auto& name : order) rows.push_back({name, coco::aggregate(by_model[name])});
      write_file(out_path, coco::report_table(rows));
      if (!report_json_path.empty())
        write_file(report_json_path,
                   coco::envelope(rc, {{"report", coco::report_json(rows)}}).dump(2) + "\n");
      return kExitOk;
    }

    if (*check_cmd) {
      const auto result = coco::run_check(repo_path, ckpt_path, vocab_path);
      bool any = false;
      json findings = json::array();
      for (const auto& f : result.findings) {
        any = any || f.inconsistent;
        findings.push_back(f.to_json());
        if (!check_json)
          std::printf("%s:%zu: %s [%s] score %.3f %s\n", f.file.c_str(), f.line, f.method.c_str(),
                      f.category.c_str(), f.score, f.inconsistent ? "INCONSISTENT" : "ok");
      }
      if (check_json)
        std::cout << coco::envelope(trained_config(coco::load_checkpoint(ckpt_path), rc),
                                    {{"findings", findings}, {"warnings", result.warnings}})
                         .dump(2)
                  << '\n';
      return any ? kExitFindings : kExitOk;
    }

    if (*pipeline_cmd) {
      if (!data_path.empty()) rc.data = data_path;
      if (!out_path.empty()) rc.out_dir = out_path;
      if (!vocab_path.empty()) rc.vocab = vocab_path;
      if (!seeds.empty()) rc.train.seeds = seeds;
      const auto result = coco::run_pipeline(rc);
      std::cout << result.table;
      return kExitOk;
    }
  } catch (const coco::StageError& e) {
    spdlog::error("stage '{}' failed: {}", e.stage(), e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
