#include "coco/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "coco/checkpoint.hpp"
#include "coco/error.hpp"

namespace coco {

// ---------------------------------------------------------------------------
// TF-IDF

std::optional<std::size_t> TfidfModel::index(const std::string& term) const {
  auto it = std::lower_bound(terms.begin(), terms.end(), term);
  if (it == terms.end() || *it != term) return std::nullopt;
  return static_cast<std::size_t>(it - terms.begin());
}

SparseVector TfidfModel::features(std::span<const std::string> tokens) const {
  std::map<std::size_t, std::size_t> counts;
  std::size_t known = 0;
  for (const auto& t : tokens)
    if (auto k = index(t)) {
      ++counts[*k];
      ++known;
    }
  SparseVector out;
  if (known == 0) return out;
  out.reserve(counts.size());
  const double len = static_cast<double>(known);
  for (const auto& [k, n] : counts) out.emplace_back(k, static_cast<double>(n) / len * idf[k]);
  return out;
}

double TfidfModel::decision(std::span<const std::string> tokens) const {
  double z = bias;
  for (const auto& [k, v] : features(tokens)) z += weights[k] * v;
  return z;
}

int TfidfModel::predict(std::span<const std::string> tokens) const {
  return decision(tokens) >= 0.0 ? 1 : 0;
}

void TfidfModel::save(const std::filesystem::path& path) const {
  ModelFile file;
  file.kind = ModelKind::kSvm;
  file.meta = {{"terms", terms}, {"c", c}, {"documents", documents}};
  file.values = idf;
  file.values.insert(file.values.end(), weights.begin(), weights.end());
  file.values.push_back(bias);
  write_model_file(path, file);
}

TfidfModel TfidfModel::load(const std::filesystem::path& path) {
  ModelFile file = read_model_file(path);
  if (file.kind != ModelKind::kSvm) throw Error(path.string() + ": not an SVM model");
  TfidfModel m;
  m.terms = file.meta.at("terms").get<std::vector<std::string>>();
  m.c = file.meta.value("c", 1.0);
  m.documents = file.meta.value("documents", std::size_t{0});
  const std::size_t n = m.terms.size();
  if (file.values.size() != 2 * n + 1)
    throw Error(path.string() + ": SVM parameter count does not match its vocabulary");
  m.idf.assign(file.values.begin(), file.values.begin() + static_cast<std::ptrdiff_t>(n));
  m.weights.assign(file.values.begin() + static_cast<std::ptrdiff_t>(n),
                   file.values.begin() + static_cast<std::ptrdiff_t>(2 * n));
  m.bias = file.values.back();
  return m;
}

std::vector<std::string> tfidf_document(const Example& example) {
  auto doc = comment_subtokens(example.comment);
  try {
    auto code = method_subtokens(example.method_new);
    doc.insert(doc.end(), code.begin(), code.end());
  } catch (const Error&) {
    // Unlexable method: the comment alone stands in for the document.
  }
  return doc;
}

TfidfModel tfidf_train(std::span<const std::vector<std::string>> documents,
                       std::span<const int> labels, const SvmOptions& options) {
  if (documents.empty()) throw Error("cannot train the SVM on an empty set");
  if (documents.size() != labels.size()) throw Error("documents and labels differ in length");
  const bool has_pos = std::any_of(labels.begin(), labels.end(), [](int y) { return y != 0; });
  const bool has_neg = std::any_of(labels.begin(), labels.end(), [](int y) { return y == 0; });
  if (!has_pos || !has_neg) throw Error("SVM training needs both classes");
  if (!(options.c > 0.0)) throw Error("SVM C must be positive");

  TfidfModel m;
  m.c = options.c;
  m.documents = documents.size();
  std::map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    std::set<std::string> seen(doc.begin(), doc.end());
    for (const auto& t : seen) ++df[t];
  }
  for (const auto& [t, n] : df) {
    m.terms.push_back(t);
    m.idf.push_back(std::log(static_cast<double>(documents.size()) / static_cast<double>(n)));
  }
  m.weights.assign(m.terms.size(), 0.0);

  const std::size_t n = documents.size();
  std::vector<SparseVector> x(n);
  std::vector<double> y(n), qii(n), alpha(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = m.features(documents[i]);
    y[i] = labels[i] != 0 ? 1.0 : -1.0;
    qii[i] = 1.0;  // constant bias feature
    for (const auto& [k, v] : x[i]) qii[i] += v * v;
  }

  // Dual coordinate descent over alpha in [0, C]; w and b kept in sync.
  const double C = options.c;
  for (std::size_t pass = 0; pass < options.max_passes; ++pass) {
    double pg_max = -INFINITY, pg_min = INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
      double wx = m.bias;
      for (const auto& [k, v] : x[i]) wx += m.weights[k] * v;
      const double g = y[i] * wx - 1.0;
      double pg = g;
      if (alpha[i] <= 0.0) pg = std::min(g, 0.0);
      else if (alpha[i] >= C) pg = std::max(g, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::abs(pg) > 1e-14) {
        const double old = alpha[i];
        alpha[i] = std::clamp(old - g / qii[i], 0.0, C);
        const double step = (alpha[i] - old) * y[i];
        for (const auto& [k, v] : x[i]) m.weights[k] += step * v;
        m.bias += step;
      }
    }
    if (pg_max - pg_min < options.tolerance) break;
  }
  return m;
}

TfidfModel tfidf_train(std::span<const Example> examples, InputMode mode,
                       const SvmOptions& options) {
  if (mode != InputMode::kPostHoc) throw Error("the TF-IDF SVM baseline is post hoc only");
  std::vector<std::vector<std::string>> docs;
  std::vector<int> labels;
  docs.reserve(examples.size());
  for (const auto& ex : examples) {
    docs.push_back(tfidf_document(ex));
    labels.push_back(ex.label);
  }
  return tfidf_train(docs, labels, options);
}

int tfidf_predict(const TfidfModel& model, const Example& example) {
  return model.predict(tfidf_document(example));
}

// ---------------------------------------------------------------------------
// Bag of words

nlohmann::json BowConfig::to_json() const {
  return {{"vocab_size", vocab_size}, {"dim", dim}, {"hidden", hidden}};
}

BowConfig BowConfig::from_json(const nlohmann::json& j) {
  BowConfig c;
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.dim = j.value("dim", c.dim);
  c.hidden = j.value("hidden", c.hidden);
  return c;
}

BowModel::BowModel(BowConfig config) : config_(config) {
  if (config_.vocab_size == 0 || config_.dim == 0 || config_.hidden == 0)
    throw Error("BOW dimensions must be positive");
  values_.assign(b2_offset() + 1, 0.0);
}

BowModel BowModel::initialize(const BowConfig& config, std::uint64_t seed) {
  BowModel m(config);
  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t from, std::size_t count, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t k = 0; k < count; ++k) m.values_[from + k] = dist(rng);
  };
  fill(m.emb_offset(), config.vocab_size * config.dim, 1.0 / std::sqrt(double(config.dim)));
  fill(m.w1_offset(), 2 * config.dim * config.hidden, 1.0 / std::sqrt(2.0 * double(config.dim)));
  fill(m.w2_offset(), config.hidden, 1.0 / std::sqrt(double(config.hidden)));
  return m;
}

namespace {

struct BowSides {
  std::vector<PieceId> comment, code;
};

BowSides split_sides(const PackedInput& in, std::size_t vocab_size) {
  BowSides s;
  for (std::size_t i = 0; i < in.ids.size(); ++i) {
    if (!in.attention_mask[i]) continue;
    const PieceId id = in.ids[i];
    if (id == specials::kClsId || id == specials::kSepId || id == specials::kPadId) continue;
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size)
      throw Error("token id " + std::to_string(id) + " outside the BOW vocabulary");
    (in.segment_mask[i] ? s.code : s.comment).push_back(id);
  }
  return s;
}

struct BowForward {
  BowSides sides;
  std::vector<double> pooled;  // [2 dim]
  std::vector<double> hidden;  // tanh activations
  double logit = 0.0;
};

void bow_forward(const BowModel& m, const PackedInput& in, BowForward& f) {
  const auto& c = m.config();
  const double* P = m.values().data();
  f.sides = split_sides(in, c.vocab_size);
  f.pooled.assign(2 * c.dim, 0.0);
  auto pool = [&](const std::vector<PieceId>& ids, double* out) {
    if (ids.empty()) return;
    for (PieceId id : ids) {
      const double* e = P + m.emb_offset() + static_cast<std::size_t>(id) * c.dim;
      for (std::size_t k = 0; k < c.dim; ++k) out[k] += e[k];
    }
    const double inv = 1.0 / static_cast<double>(ids.size());
    for (std::size_t k = 0; k < c.dim; ++k) out[k] *= inv;
  };
  pool(f.sides.comment, f.pooled.data());
  pool(f.sides.code, f.pooled.data() + c.dim);

  f.hidden.assign(c.hidden, 0.0);
  for (std::size_t j = 0; j < c.hidden; ++j) {
    double a = P[m.b1_offset() + j];
    for (std::size_t k = 0; k < 2 * c.dim; ++k) a += f.pooled[k] * P[m.w1_offset() + k * c.hidden + j];
    f.hidden[j] = std::tanh(a);
  }
  double z = P[m.b2_offset()];
  for (std::size_t j = 0; j < c.hidden; ++j) z += f.hidden[j] * P[m.w2_offset() + j];
  f.logit = z;
}

void bow_backward_one(const BowModel& m, const BowForward& f, double dz, double* G) {
  const auto& c = m.config();
  const double* P = m.values().data();
  G[m.b2_offset()] += dz;
  std::vector<double> da(c.hidden);
  for (std::size_t j = 0; j < c.hidden; ++j) {
    G[m.w2_offset() + j] += dz * f.hidden[j];
    da[j] = dz * P[m.w2_offset() + j] * (1.0 - f.hidden[j] * f.hidden[j]);
    G[m.b1_offset() + j] += da[j];
  }
  std::vector<double> dpool(2 * c.dim, 0.0);
  for (std::size_t k = 0; k < 2 * c.dim; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < c.hidden; ++j) {
      G[m.w1_offset() + k * c.hidden + j] += f.pooled[k] * da[j];
      acc += da[j] * P[m.w1_offset() + k * c.hidden + j];
    }
    dpool[k] = acc;
  }
  auto scatter = [&](const std::vector<PieceId>& ids, const double* d) {
    if (ids.empty()) return;
    const double inv = 1.0 / static_cast<double>(ids.size());
    for (PieceId id : ids) {
      double* g = G + m.emb_offset() + static_cast<std::size_t>(id) * c.dim;
      for (std::size_t k = 0; k < c.dim; ++k) g[k] += d[k] * inv;
    }
  };
  scatter(f.sides.comment, dpool.data());
  scatter(f.sides.code, dpool.data() + c.dim);
}

}  // namespace

double BowModel::logit(const PackedInput& input) const {
  BowForward f;
  bow_forward(*this, input, f);
  return f.logit;
}

void BowModel::save(const std::filesystem::path& path, InputMode mode, std::size_t max_len) const {
  ModelFile file;
  file.kind = ModelKind::kBow;
  file.meta = {{"config", config_.to_json()}, {"mode", to_string(mode)}, {"max_len", max_len}};
  file.values = values_;
  write_model_file(path, file);
}

BowModel BowModel::load(const std::filesystem::path& path, InputMode* mode, std::size_t* max_len) {
  ModelFile file = read_model_file(path);
  if (file.kind != ModelKind::kBow) throw Error(path.string() + ": not a BOW model");
  BowModel m(BowConfig::from_json(file.meta.at("config")));
  if (file.values.size() != m.values_.size())
    throw Error(path.string() + ": BOW parameter count does not match its config");
  m.values_ = std::move(file.values);
  if (mode) *mode = parse_mode(file.meta.at("mode").get<std::string>());
  if (max_len) *max_len = file.meta.at("max_len").get<std::size_t>();
  return m;
}

Gradients bow_backward(const BowModel& model, std::span<const PackedInput> batch) {
  if (batch.empty()) throw Error("backward on an empty batch");
  Gradients g;
  g.values.assign(model.values().size(), 0.0);
  BowForward f;
  for (const auto& in : batch) {
    if (!in.label) throw Error("training example " + in.id + " has no label");
    bow_forward(model, in, f);
    g.loss += bce_loss(f.logit, *in.label);
    bow_backward_one(model, f, sigmoid(f.logit) - static_cast<double>(*in.label),
                     g.values.data());
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  g.loss *= inv;
  for (auto& v : g.values) v *= inv;
  return g;
}

std::vector<Prediction> bow_predict(const BowModel& model, std::span<const PackedInput> batch) {
  std::vector<Prediction> out;
  out.reserve(batch.size());
  for (const auto& in : batch) {
    const double s = sigmoid(model.logit(in));
    out.push_back({s, s >= 0.5 ? 1 : 0});
  }
  return out;
}

namespace {

Metrics bow_evaluate(const BowModel& model, std::span<const PackedInput> data) {
  const auto preds = bow_predict(model, data);
  std::vector<int> p, y;
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (!data[k].label) throw Error("evaluation example " + data[k].id + " has no label");
    p.push_back(preds[k].label);
    y.push_back(*data[k].label);
  }
  return compute(p, y);
}

}  // namespace

BowTrainResult bow_train(std::span<const PackedInput> train_set,
                         std::span<const PackedInput> valid_set, const BowConfig& config,
                         const BowTrainConfig& tc, std::uint64_t seed) {
  if (train_set.empty()) throw Error("empty training set");
  if (valid_set.empty()) throw Error("empty validation set");
  if (tc.batch == 0 || tc.max_epochs == 0 || tc.patience == 0)
    throw Error("BOW batch, max_epochs and patience must be positive");

  BowModel model = BowModel::initialize(config, seed);
  Adam adam(model.values().size(), 0.9, 0.999, 1e-8);
  std::mt19937_64 rng(seed ^ 0x5DEECE66DULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  BowTrainResult result;
  result.best = model;
  double best_f1 = -1.0;
  for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch) {
      const std::size_t end = std::min(order.size(), start + tc.batch);
      std::vector<PackedInput> mb;
      for (std::size_t k = start; k < end; ++k) mb.push_back(train_set[order[k]]);
      const Gradients g = bow_backward(model, mb);
      loss_sum += g.loss * static_cast<double>(mb.size());
      adam.step(model.values(), g.values, tc.learning_rate);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_set.size());
    rec.valid = bow_evaluate(model, valid_set);
    const double f1 = rec.valid.f1.value_or(0.0);
    if (f1 > best_f1) {
      best_f1 = f1;
      result.best = model;
      result.best_epoch = epoch;
      rec.improved = true;
    }
    result.history.push_back(rec);
    if (epoch - result.best_epoch >= tc.patience) break;
  }
  result.best_f1 = best_f1;
  return result;
}

}  // namespace coco
