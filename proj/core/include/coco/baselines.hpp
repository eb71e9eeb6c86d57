#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coco/corpus.hpp"
#include "coco/encoder.hpp"
#include "coco/evalreport.hpp"
#include "coco/packing.hpp"

namespace coco {

// ---------------------------------------------------------------------------
// TF-IDF + linear SVM (post hoc only)

using SparseVector = std::vector<std::pair<std::size_t, double>>;

struct SvmOptions {
  double c = 1.0;             // hinge-loss weight
  double tolerance = 1e-4;    // projected-gradient gap at convergence
  std::size_t max_passes = 100000;
};

class TfidfModel {
 public:
  std::vector<std::string> terms;  // sorted, unique
  std::vector<double> idf;         // log(N / df) per term
  std::vector<double> weights;     // one per term
  double bias = 0.0;
  double c = 1.0;
  std::size_t documents = 0;

  std::optional<std::size_t> index(const std::string& term) const;
  // tf = count / length over known terms; unseen terms are dropped.
  SparseVector features(std::span<const std::string> tokens) const;
  double decision(std::span<const std::string> tokens) const;
  // 1 iff the decision value is >= 0 (ties go to inconsistent, like the
  // encoder's threshold).
  int predict(std::span<const std::string> tokens) const;

  void save(const std::filesystem::path& path) const;
  static TfidfModel load(const std::filesystem::path& path);
};

// Comment subtokens followed by the current method's subtokens.
std::vector<std::string> tfidf_document(const Example& example);

// Soft-margin linear SVM, min 1/2 |w|^2 + C sum hinge(y (w.x + b)), with the
// bias treated as a weight on a constant feature. Solved in the dual by
// coordinate descent. Throws on empty input or a single-class label set.
TfidfModel tfidf_train(std::span<const std::vector<std::string>> documents,
                       std::span<const int> labels, const SvmOptions& options = {});
TfidfModel tfidf_train(std::span<const Example> examples, InputMode mode,
                       const SvmOptions& options = {});

int tfidf_predict(const TfidfModel& model, const Example& example);

// ---------------------------------------------------------------------------
// Bag-of-words: mean embeddings of both sides into a two-layer network.

struct BowConfig {
  std::size_t vocab_size = 8000;
  std::size_t dim = 32;
  std::size_t hidden = 32;

  nlohmann::json to_json() const;
  static BowConfig from_json(const nlohmann::json& j);
};

struct BowTrainConfig {
  double learning_rate = 1e-2;
  std::size_t batch = 16;
  std::size_t max_epochs = 20;
  std::size_t patience = 10;
};

class BowModel {
 public:
  BowModel() = default;
  explicit BowModel(BowConfig config);  // zero-initialized
  static BowModel initialize(const BowConfig& config, std::uint64_t seed);

  const BowConfig& config() const noexcept { return config_; }
  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  // Offsets into values(): emb [V x dim], w1 [2dim x hidden], b1 [hidden],
  // w2 [hidden], b2 [1].
  std::size_t emb_offset() const { return 0; }
  std::size_t w1_offset() const { return config_.vocab_size * config_.dim; }
  std::size_t b1_offset() const { return w1_offset() + 2 * config_.dim * config_.hidden; }
  std::size_t w2_offset() const { return b1_offset() + config_.hidden; }
  std::size_t b2_offset() const { return w2_offset() + config_.hidden; }

  // Comment side: segment 0 without [CLS]/[SEP]; code side: segment 1
  // without [SEP]; padding ignored. An empty side pools to zero.
  double logit(const PackedInput& input) const;

  void save(const std::filesystem::path& path, InputMode mode, std::size_t max_len) const;
  static BowModel load(const std::filesystem::path& path, InputMode* mode = nullptr,
                       std::size_t* max_len = nullptr);

 private:
  BowConfig config_;
  std::vector<double> values_;
};

// Exact gradient of mean BCE over the batch.
Gradients bow_backward(const BowModel& model, std::span<const PackedInput> batch);

struct BowTrainResult {
  BowModel best;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_f1 = 0.0;
};

BowTrainResult bow_train(std::span<const PackedInput> train_set,
                         std::span<const PackedInput> valid_set, const BowConfig& config,
                         const BowTrainConfig& tc, std::uint64_t seed);

std::vector<Prediction> bow_predict(const BowModel& model, std::span<const PackedInput> batch);

}  // namespace coco
