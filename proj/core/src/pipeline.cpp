#include "coco/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <spdlog/spdlog.h>

#include "coco/checkpoint.hpp"
#include "coco/corpus.hpp"
#include "coco/javadoc.hpp"
#include "coco/mine.hpp"

namespace coco {
namespace fs = std::filesystem;

std::size_t RunConfig::resolved_max_len() const {
  if (max_len) return *max_len;
  return attention == AttentionMode::kSliding ? kSlidingAttentionMaxLen : kFullAttentionMaxLen;
}

EncoderConfig RunConfig::resolved_encoder(std::size_t actual_vocab) const {
  EncoderConfig ec = encoder;
  ec.vocab_size = actual_vocab;
  ec.max_len = resolved_max_len();
  ec.attention_mode = attention;
  return ec;
}

void RunConfig::validate() const {
  const std::size_t len = resolved_max_len();
  const std::size_t cap =
      attention == AttentionMode::kSliding ? kSlidingAttentionMaxLen : kFullAttentionMaxLen;
  if (len < 3 || len > cap)
    throw Error("max_len " + std::to_string(len) + " outside [3, " + std::to_string(cap) +
                "] for " + std::string(to_string(attention)) + " attention");
  if (train.seeds.empty()) throw Error("at least one seed is required");
  if (vocab_size < specials::all().size()) throw Error("vocab_size below the special tokens");
  train.validate();
  resolved_encoder(vocab_size).validate();
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = {{"mode", to_string(mode)},
                      {"attention", to_string(attention)},
                      {"max_len", resolved_max_len()},
                      {"data", data.string()},
                      {"out_dir", out_dir.string()},
                      {"vocab", vocab.string()},
                      {"scheme", to_string(scheme)},
                      {"vocab_size", vocab_size},
                      {"encoder", encoder.to_json()},
                      {"train", train.to_json()},
                      {"baselines", baselines},
                      {"bow",
                       {{"dim", bow.dim},
                        {"hidden", bow.hidden},
                        {"learning_rate", bow_train.learning_rate},
                        {"batch", bow_train.batch},
                        {"max_epochs", bow_train.max_epochs},
                        {"patience", bow_train.patience}}},
                      {"svm", {{"c", svm.c}, {"tolerance", svm.tolerance}}}};
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
  if (j.contains("attention"))
    c.attention = parse_attention_mode(j.at("attention").get<std::string>());
  if (j.contains("max_len") && !j.at("max_len").is_null())
    c.max_len = j.at("max_len").get<std::size_t>();
  c.data = j.value("data", std::string{});
  c.out_dir = j.value("out_dir", std::string{});
  c.vocab = j.value("vocab", std::string{});
  if (j.contains("scheme")) c.scheme = parse_scheme(j.at("scheme").get<std::string>());
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  if (j.contains("encoder")) c.encoder = EncoderConfig::from_json(j.at("encoder"));
  if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
  c.baselines = j.value("baselines", c.baselines);
  if (j.contains("bow")) {
    const auto& b = j.at("bow");
    c.bow.dim = b.value("dim", c.bow.dim);
    c.bow.hidden = b.value("hidden", c.bow.hidden);
    c.bow_train.learning_rate = b.value("learning_rate", c.bow_train.learning_rate);
    c.bow_train.batch = b.value("batch", c.bow_train.batch);
    c.bow_train.max_epochs = b.value("max_epochs", c.bow_train.max_epochs);
    c.bow_train.patience = b.value("patience", c.bow_train.patience);
  }
  if (j.contains("svm")) {
    c.svm.c = j.at("svm").value("c", c.svm.c);
    c.svm.tolerance = j.at("svm").value("tolerance", c.svm.tolerance);
  }
  return c;
}

nlohmann::json envelope(const RunConfig& config, nlohmann::json payload) {
  nlohmann::json j = {{"format_version", kFormatVersion}, {"run_config", config.to_json()}};
  for (auto& [k, v] : payload.items()) j[k] = std::move(v);
  return j;
}

namespace {

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os << text;
}

struct Packed {
  std::vector<PackedInput> train, valid, test;
  std::size_t skipped = 0;
};

}  // namespace

PipelineResult run_pipeline(const RunConfig& config) {
  stage("config", [&] {
    config.validate();
    if (config.out_dir.empty()) throw Error("no output directory");
    fs::create_directories(config.out_dir);
    return 0;
  });

  const std::vector<Example> examples = stage("ingest", [&] {
    if (config.data.empty()) throw Error("no data path");
    if (fs::is_directory(config.data)) return ingest(config.data).examples;
    if (!fs::exists(config.data)) throw Error("data not found: " + config.data.string());
    return read_examples(config.data);
  });

  const SubwordVocab vocab = stage("vocab", [&] {
    if (!config.vocab.empty()) {
      if (!fs::exists(config.vocab))
        throw Error("vocab file not found: " + config.vocab.string());
      return SubwordVocab::load(config.vocab);
    }
    std::vector<std::vector<std::string>> corpus;
    for (const auto& e : examples) {
      if (e.split != Split::kTrain) continue;
      corpus.push_back(comment_subtokens(e.comment));
      try {
        corpus.push_back(method_subtokens(e.method_old));
        corpus.push_back(method_subtokens(e.method_new));
      } catch (const Error&) {
      }
    }
    auto v = train_vocab(config.scheme, corpus, config.vocab_size);
    v.save(config.out_dir / "vocab.txt");
    return v;
  });

  const std::size_t max_len = config.resolved_max_len();
  const Packed data = stage("pack", [&] {
    Packed p;
    for (const auto& e : examples) {
      PackedInput in;
      try {
        in = pack_example(e, vocab, config.mode, max_len);
      } catch (const Error& err) {
        spdlog::warn("skipping {}: {}", e.id, err.what());
        ++p.skipped;
        continue;
      }
      (e.split == Split::kTrain ? p.train : e.split == Split::kValid ? p.valid : p.test)
          .push_back(std::move(in));
    }
    if (p.train.empty()) throw Error("no training examples");
    if (p.valid.empty()) throw Error("no validation examples");
    return p;
  });
  const bool eval_on_test = !data.test.empty();
  const auto& eval_set = eval_on_test ? data.test : data.valid;

  const EncoderConfig ec = config.resolved_encoder(vocab.size());
  std::vector<Metrics> encoder_runs;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto seed : config.train.seeds) {
    const TrainResult tr = stage("train", [&] {
      return train(data.train, data.valid, config.train, ec, seed, [&](const EpochRecord& r) {
        spdlog::info("seed {} epoch {} loss {:.4f} valid F1 {}", seed, r.epoch, r.train_loss,
                     format_percent(r.valid.f1));
      });
    });
    stage("train", [&] {
      EncoderCheckpoint ckpt{tr.best, config.mode, max_len, {{"seed", seed}}};
      save_checkpoint(config.out_dir / ("encoder-seed" + std::to_string(seed) + ".ckpt"), ckpt);
      return 0;
    });
    const Metrics m = stage("eval", [&] { return evaluate(tr.best, eval_set); });
    encoder_runs.push_back(m);
    runs.push_back({{"model", "encoder"},
                    {"seed", seed},
                    {"metrics", m.to_json()},
                    {"history", tr.history_json()}});
  }

  std::vector<ReportRow> rows;
  const std::string encoder_name =
      config.attention == AttentionMode::kFull ? "Encoder (full)" : "Encoder (sliding)";
  if (config.baselines) {
    if (config.mode == InputMode::kPostHoc) {
      const Metrics svm = stage("baselines", [&] {
        std::vector<Example> train_ex, eval_ex;
        const Split eval_split = eval_on_test ? Split::kTest : Split::kValid;
        for (const auto& e : examples) {
          if (e.split == Split::kTrain) train_ex.push_back(e);
          if (e.split == eval_split) eval_ex.push_back(e);
        }
        const TfidfModel model = tfidf_train(train_ex, InputMode::kPostHoc, config.svm);
        model.save(config.out_dir / "svm.model");
        std::vector<int> p, y;
        for (const auto& e : eval_ex) {
          p.push_back(tfidf_predict(model, e));
          y.push_back(e.label);
        }
        return compute(p, y);
      });
      runs.push_back({{"model", "svm"}, {"metrics", svm.to_json()}});
      rows.push_back({"TF-IDF SVM", aggregate(std::vector<Metrics>{svm})});
    }
    std::vector<Metrics> bow_runs;
    for (const auto seed : config.train.seeds) {
      const Metrics m = stage("baselines", [&] {
        BowConfig bc = config.bow;
        bc.vocab_size = vocab.size();
        const BowTrainResult br = bow_train(data.train, data.valid, bc, config.bow_train, seed);
        br.best.save(config.out_dir / ("bow-seed" + std::to_string(seed) + ".model"), config.mode,
                     max_len);
        const auto preds = bow_predict(br.best, eval_set);
        std::vector<int> p, y;
        for (std::size_t k = 0; k < eval_set.size(); ++k) {
          p.push_back(preds[k].label);
          y.push_back(*eval_set[k].label);
        }
        return compute(p, y);
      });
      bow_runs.push_back(m);
      runs.push_back({{"model", "bow"}, {"seed", seed}, {"metrics", m.to_json()}});
    }
    rows.push_back({"BOW", aggregate(bow_runs)});
  }
  rows.push_back({encoder_name, aggregate(encoder_runs)});

  PipelineResult result;
  stage("report", [&] {
    result.rows = rows;
    result.table = report_table(rows);
    result.metrics_path = config.out_dir / "metrics.json";
    nlohmann::json payload = {{"eval_split", eval_on_test ? "test" : "valid"},
                              {"examples", examples.size()},
                              {"skipped", data.skipped},
                              {"runs", runs},
                              {"report", report_json(rows)}};
    write_text(result.metrics_path, envelope(config, payload).dump(2) + "\n");
    write_text(config.out_dir / "report.txt", result.table);
    return 0;
  });
  return result;
}

nlohmann::json Finding::to_json() const {
  return {{"file", file},       {"method", method},
          {"category", category}, {"line", line},
          {"score", score},     {"verdict", inconsistent ? "inconsistent" : "consistent"}};
}

CheckResult run_check(const fs::path& repo, const fs::path& ckpt_path, const fs::path& vocab_path) {
  if (ckpt_path.empty() || !fs::exists(ckpt_path))
    throw Error("no trained checkpoint at '" + ckpt_path.string() +
                "'; run `coco train` first");
  if (vocab_path.empty() || !fs::exists(vocab_path))
    throw Error("vocab file not found: " + vocab_path.string());
  const EncoderCheckpoint ckpt = load_checkpoint(ckpt_path);
  const SubwordVocab vocab = SubwordVocab::load(vocab_path);
  if (vocab.size() > ckpt.params.config().vocab_size)
    throw Error("vocab has " + std::to_string(vocab.size()) +
                " pieces but the checkpoint was trained on " +
                std::to_string(ckpt.params.config().vocab_size));
  require_git_repo(repo);

  CheckResult result;
  auto warn = [&](std::string msg) {
    spdlog::warn("{}", msg);
    result.warnings.push_back(std::move(msg));
  };

  const auto files = git_lines(repo, {"diff", "--name-only", "HEAD", "--", "*.java"});
  for (const auto& file : files) {
    std::string before_src;
    if (!git_show(repo, "HEAD:" + file, before_src)) continue;  // newly added file
    std::ifstream is(repo / file, std::ios::binary);
    if (!is) continue;  // deleted in the working tree
    const std::string after_src((std::istreambuf_iterator<char>(is)),
                                std::istreambuf_iterator<char>());
    std::vector<DocumentedMethod> before, after;
    try {
      before = extract_documented_methods(before_src);
      after = extract_documented_methods(after_src);
    } catch (const ParseError& e) {
      warn("skipping " + file + ": " + e.what());
      continue;
    }
    std::map<std::string, const DocumentedMethod*> old_by_key;
    for (const auto& m : before) old_by_key.emplace(m.key, &m);

    for (const auto& m : after) {
      auto it = old_by_key.find(m.key);
      if (it == old_by_key.end() || it->second->text == m.text) continue;
      std::optional<Finding> best;
      for (const auto& section : parse_doc_comment(m.doc).sections()) {
        Example ex;
        ex.id = file + ":" + m.key;
        ex.comment = section.text;
        ex.method_old = it->second->text;
        ex.method_new = m.text;
        ex.category = section.category;
        PackedInput in;
        try {
          in = pack_example(ex, vocab, ckpt.mode, ckpt.max_len);
        } catch (const Error& e) {
          warn("skipping " + file + ":" + m.key + ": " + e.what());
          break;
        }
        const auto pred = predict(ckpt.params, std::vector<PackedInput>{in}).front();
        if (!best || pred.score > best->score)
          best = Finding{file, m.key, std::string(to_string(section.category)), m.line,
                         pred.score, pred.label == kInconsistent};
      }
      if (best) result.findings.push_back(*best);
    }
  }
  std::stable_sort(result.findings.begin(), result.findings.end(),
                   [](const Finding& a, const Finding& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.file != b.file) return a.file < b.file;
                     return a.line < b.line;
                   });
  return result;
}

}  // namespace coco
