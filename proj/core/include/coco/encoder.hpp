#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coco/evalreport.hpp"
#include "coco/packing.hpp"

namespace coco {

enum class AttentionMode { kFull, kSliding };

std::string_view to_string(AttentionMode mode);
AttentionMode parse_attention_mode(std::string_view text);

struct EncoderConfig {
  std::size_t vocab_size = 8000;
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ffn = 256;
  std::size_t max_len = kFullAttentionMaxLen;
  double dropout_rate = 0.1;
  AttentionMode attention_mode = AttentionMode::kFull;
  // Sliding mode: position i attends to j with |i - j| <= window.
  std::size_t window = 256;
  // Sliding mode: the [CLS] row attends to every position.
  bool global_cls = true;
  bool use_segment_embeddings = true;

  void validate() const;
  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct ParamSpec {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return rows * cols; }
};

// All weights in one flat buffer; `specs` gives the declared order used by
// checkpoints, gradients and the optimizer.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(EncoderConfig config);  // zero-initialized

  // Symmetric uniform in +-1/sqrt(fan_in); LayerNorm gains 1, biases 0.
  static ModelParams initialize(const EncoderConfig& config, std::uint64_t seed);

  const EncoderConfig& config() const noexcept { return config_; }
  const std::vector<ParamSpec>& specs() const noexcept { return specs_; }
  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  const ParamSpec& spec(const std::string& name) const;
  std::span<double> tensor(const std::string& name);
  std::span<const double> tensor(const std::string& name) const;

  bool all_finite() const;

 private:
  EncoderConfig config_;
  std::vector<ParamSpec> specs_;
  std::vector<double> values_;
};

// Attention score evaluations performed (one per query/key pair per head
// per layer); masked keys are never evaluated.
struct AttentionStats {
  std::uint64_t score_evaluations = 0;
};

struct ForwardOptions {
  bool training = false;           // enables dropout
  std::mt19937_64* rng = nullptr;  // required when training with dropout
  AttentionStats* stats = nullptr;
};

// One logit per example, read from the [CLS] position. All inputs must share
// a length <= config.max_len.
std::vector<double> forward(const ModelParams& params, std::span<const PackedInput> batch,
                            const ForwardOptions& options = {});

// Numerically stable -[y log s(z) + (1-y) log(1 - s(z))].
double bce_loss(double logit, int label);
double sigmoid(double z);

// Adds the summed (not averaged) per-example gradient of BCE into `grad`
// and returns the summed loss.
double accumulate_gradient(const ModelParams& params, std::span<const PackedInput> batch,
                           std::vector<double>& grad, const ForwardOptions& options = {});

struct Gradients {
  std::vector<double> values;  // same layout as ModelParams::values()
  double loss = 0.0;           // mean BCE over the batch
};

// Exact gradient of mean BCE over the batch (dropout off).
Gradients backward(const ModelParams& params, std::span<const PackedInput> batch);

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t micro_batch = 4;
  std::size_t accumulation_steps = 4;
  std::size_t patience = 10;
  std::size_t max_epochs = 50;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Restrict effective batch to {16, 32, 64}; off for desk experiments.
  bool require_standard_batch = true;

  std::size_t effective_batch() const { return micro_batch * accumulation_steps; }
  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

class Adam {
 public:
  Adam(std::size_t n, double beta1, double beta2, double epsilon);
  void step(std::vector<double>& values, std::span<const double> grad, double learning_rate);
  std::size_t steps() const noexcept { return t_; }

 private:
  double beta1_, beta2_, epsilon_;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

// Sums micro-batch gradients until the optimizer step.
class GradientAccumulator {
 public:
  explicit GradientAccumulator(std::size_t n) : sum_(n, 0.0) {}

  double add(const ModelParams& params, std::span<const PackedInput> micro_batch,
             const ForwardOptions& options = {});
  std::size_t examples() const noexcept { return count_; }
  // Mean gradient over all examples added so far.
  std::vector<double> mean() const;
  void reset();

 private:
  std::vector<double> sum_;
  std::size_t count_ = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  Metrics valid;
  bool improved = false;

  nlohmann::json to_json() const;
};

struct TrainResult {
  ModelParams best;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_f1 = 0.0;
  std::size_t optimizer_steps = 0;

  nlohmann::json history_json() const;
};

// Adam with gradient accumulation; validation F1 (threshold 0.5) after each
// epoch; stops once the best F1 has not improved for `patience` epochs and
// returns the best-F1 parameters. All randomness derives from `seed`.
TrainResult train(std::span<const PackedInput> train_set, std::span<const PackedInput> valid_set,
                  const TrainConfig& tc, const EncoderConfig& ec, std::uint64_t seed,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

struct Prediction {
  double score = 0.0;  // sigmoid(logit)
  int label = 0;       // 1 iff score >= 0.5
};

std::vector<Prediction> predict(const ModelParams& params, std::span<const PackedInput> batch,
                                std::size_t batch_size = 32);

// Validation helper shared by train and the CLI.
Metrics evaluate(const ModelParams& params, std::span<const PackedInput> data);

}  // namespace coco
