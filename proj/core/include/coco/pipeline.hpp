#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coco/baselines.hpp"
#include "coco/encoder.hpp"
#include "coco/packing.hpp"
#include "coco/subword.hpp"

namespace coco {

inline constexpr int kFormatVersion = 1;

// Everything a run depends on. Serialized into every structured output.
struct RunConfig {
  InputMode mode = InputMode::kPostHoc;
  AttentionMode attention = AttentionMode::kFull;
  std::optional<std::size_t> max_len;  // default: 512 full, 1024 sliding

  std::filesystem::path data;     // published corpus dir or canonical JSONL
  std::filesystem::path out_dir;  // artifacts
  std::filesystem::path vocab;    // existing vocab file; empty = train one

  SubwordScheme scheme = SubwordScheme::kBpe;
  std::size_t vocab_size = 8000;

  EncoderConfig encoder;  // vocab_size, max_len and attention come from above
  TrainConfig train;
  bool baselines = true;
  BowConfig bow;
  BowTrainConfig bow_train;
  SvmOptions svm;

  std::size_t resolved_max_len() const;
  // Encoder config with the run-level fields applied.
  EncoderConfig resolved_encoder(std::size_t actual_vocab) const;
  void validate() const;

  nlohmann::json to_json() const;
  // Missing keys keep their defaults.
  static RunConfig from_json(const nlohmann::json& j);
};

// Wraps a payload with the format version and run-config echo.
nlohmann::json envelope(const RunConfig& config, nlohmann::json payload);

struct PipelineResult {
  std::vector<ReportRow> rows;
  std::string table;
  std::filesystem::path metrics_path;
};

// ingest -> vocab -> pack -> train (x seeds) -> eval -> report. Writes
// vocab, checkpoints, metrics.json and report.txt under out_dir. A failing
// stage raises StageError carrying the stage name. Structured outputs are
// byte-identical across reruns with the same inputs and seeds.
PipelineResult run_pipeline(const RunConfig& config);

struct Finding {
  std::string file;
  std::string method;
  std::string category;
  std::size_t line = 0;
  double score = 0.0;
  bool inconsistent = false;

  nlohmann::json to_json() const;
};

struct CheckResult {
  std::vector<Finding> findings;  // score descending
  std::vector<std::string> warnings;
};

// Compares the working tree against HEAD and scores each comment section of
// every modified documented method with the checkpoint, packed in the
// checkpoint's input mode (the highest-scoring section represents the
// method).
CheckResult run_check(const std::filesystem::path& repo, const std::filesystem::path& ckpt,
                      const std::filesystem::path& vocab);

}  // namespace coco
