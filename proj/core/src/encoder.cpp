#include "coco/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coco/error.hpp"

namespace coco {

std::string_view to_string(AttentionMode mode) {
  return mode == AttentionMode::kFull ? "full" : "sliding";
}

AttentionMode parse_attention_mode(std::string_view text) {
  if (text == "full") return AttentionMode::kFull;
  if (text == "sliding") return AttentionMode::kSliding;
  throw Error("unknown attention mode '" + std::string(text) + "'");
}

void EncoderConfig::validate() const {
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0)
    throw Error("d_model must be a positive multiple of n_heads");
  if (n_layers == 0) throw Error("n_layers must be positive");
  if (d_ffn == 0) throw Error("d_ffn must be positive");
  if (max_len < 3) throw Error("max_len must be at least 3");
  if (window < 1) throw Error("window must be at least 1");
  if (vocab_size < specials::all().size())
    throw Error("vocab_size smaller than the reserved special tokens");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw Error("dropout_rate must be in [0, 1)");
}

nlohmann::json EncoderConfig::to_json() const {
  return {{"vocab_size", vocab_size},
          {"d_model", d_model},
          {"n_layers", n_layers},
          {"n_heads", n_heads},
          {"d_ffn", d_ffn},
          {"max_len", max_len},
          {"dropout_rate", dropout_rate},
          {"attention_mode", to_string(attention_mode)},
          {"window", window},
          {"global_cls", global_cls},
          {"use_segment_embeddings", use_segment_embeddings}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.d_model = j.value("d_model", c.d_model);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_ffn = j.value("d_ffn", c.d_ffn);
  c.max_len = j.value("max_len", c.max_len);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  if (j.contains("attention_mode"))
    c.attention_mode = parse_attention_mode(j.at("attention_mode").get<std::string>());
  c.window = j.value("window", c.window);
  c.global_cls = j.value("global_cls", c.global_cls);
  c.use_segment_embeddings = j.value("use_segment_embeddings", c.use_segment_embeddings);
  return c;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (micro_batch == 0 || accumulation_steps == 0)
    throw Error("micro_batch and accumulation_steps must be positive");
  if (patience == 0) throw Error("patience must be at least 1");
  if (max_epochs == 0) throw Error("max_epochs must be at least 1");
  const auto eb = effective_batch();
  if (require_standard_batch && eb != 16 && eb != 32 && eb != 64)
    throw Error("effective batch " + std::to_string(eb) +
                " is not one of {16, 32, 64}; disable require_standard_batch to override");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"micro_batch", micro_batch},
          {"accumulation_steps", accumulation_steps},
          {"effective_batch", effective_batch()},
          {"patience", patience},
          {"max_epochs", max_epochs},
          {"seeds", seeds},
          {"beta1", beta1},
          {"beta2", beta2},
          {"epsilon", epsilon},
          {"require_standard_batch", require_standard_batch}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.micro_batch = j.value("micro_batch", c.micro_batch);
  c.accumulation_steps = j.value("accumulation_steps", c.accumulation_steps);
  c.patience = j.value("patience", c.patience);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.seeds = j.value("seeds", c.seeds);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.require_standard_batch = j.value("require_standard_batch", c.require_standard_batch);
  return c;
}

// ---------------------------------------------------------------------------
// Parameter layout

namespace {

struct LayerOffsets {
  std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
};

struct Layout {
  std::size_t tok = 0, pos = 0, seg = 0;
  bool has_seg = false;
  std::vector<LayerOffsets> layers;
  std::size_t lnf_g = 0, lnf_b = 0, cls_w = 0, cls_b = 0;
  std::size_t total = 0;
};

Layout build_layout(const EncoderConfig& c, std::vector<ParamSpec>* specs) {
  Layout L;
  std::size_t off = 0;
  auto add = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    if (specs) specs->push_back({name, rows, cols, off});
    const std::size_t at = off;
    off += rows * cols;
    return at;
  };
  const std::size_t d = c.d_model;
  L.tok = add("tok_emb", c.vocab_size, d);
  L.pos = add("pos_emb", c.max_len, d);
  if (c.use_segment_embeddings) {
    L.seg = add("seg_emb", 2, d);
    L.has_seg = true;
  }
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerOffsets o{};
    o.ln1_g = add(p + "ln1.gamma", 1, d);
    o.ln1_b = add(p + "ln1.beta", 1, d);
    o.wq = add(p + "attn.wq", d, d);
    o.bq = add(p + "attn.bq", 1, d);
    o.wk = add(p + "attn.wk", d, d);
    o.bk = add(p + "attn.bk", 1, d);
    o.wv = add(p + "attn.wv", d, d);
    o.bv = add(p + "attn.bv", 1, d);
    o.wo = add(p + "attn.wo", d, d);
    o.bo = add(p + "attn.bo", 1, d);
    o.ln2_g = add(p + "ln2.gamma", 1, d);
    o.ln2_b = add(p + "ln2.beta", 1, d);
    o.w1 = add(p + "ffn.w1", d, c.d_ffn);
    o.b1 = add(p + "ffn.b1", 1, c.d_ffn);
    o.w2 = add(p + "ffn.w2", c.d_ffn, d);
    o.b2 = add(p + "ffn.b2", 1, d);
    L.layers.push_back(o);
  }
  L.lnf_g = add("final_ln.gamma", 1, d);
  L.lnf_b = add("final_ln.beta", 1, d);
  L.cls_w = add("cls.w", 1, d);
  L.cls_b = add("cls.b", 1, 1);
  L.total = off;
  return L;
}

constexpr double kLayerNormEps = 1e-5;

}  // namespace

ModelParams::ModelParams(EncoderConfig config) : config_(std::move(config)) {
  config_.validate();
  const Layout L = build_layout(config_, &specs_);
  values_.assign(L.total, 0.0);
}

ModelParams ModelParams::initialize(const EncoderConfig& config, std::uint64_t seed) {
  ModelParams p(config);
  std::mt19937_64 rng(seed);
  for (const auto& s : p.specs_) {
    auto t = std::span<double>(p.values_).subspan(s.offset, s.size());
    const bool is_bias = s.rows == 1 && s.name.find(".w") == std::string::npos &&
                         s.name.find("gamma") == std::string::npos;
    if (s.name.find("gamma") != std::string::npos) {
      std::fill(t.begin(), t.end(), 1.0);
    } else if (is_bias && s.name != "cls.w") {
      std::fill(t.begin(), t.end(), 0.0);
    } else {
      // Embedding tables draw at the d_model scale; matrices use fan-in.
      const bool embedding = s.name.ends_with("_emb");
      const double fan_in = embedding || s.rows == 1 ? static_cast<double>(s.cols)
                                                     : static_cast<double>(s.rows);
      const double bound = 1.0 / std::sqrt(fan_in);
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (auto& v : t) v = dist(rng);
    }
  }
  return p;
}

const ParamSpec& ModelParams::spec(const std::string& name) const {
  for (const auto& s : specs_)
    if (s.name == name) return s;
  throw Error("no parameter named " + name);
}

std::span<double> ModelParams::tensor(const std::string& name) {
  const auto& s = spec(name);
  return std::span<double>(values_).subspan(s.offset, s.size());
}

std::span<const double> ModelParams::tensor(const std::string& name) const {
  const auto& s = spec(name);
  return std::span<const double>(values_).subspan(s.offset, s.size());
}

bool ModelParams::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Numerics

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_loss(double logit, int label) {
  // log(1 + e^z) - y z, written to avoid overflow for large |z|.
  const double softplus = std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
  return softplus - (label != 0 ? logit : 0.0);
}

namespace {

// Y[n x out] += X[n x in] * W[in x out]
void matmul_add(const double* X, const double* W, double* Y, std::size_t n, std::size_t in,
                std::size_t out) {
  for (std::size_t i = 0; i < n; ++i) {
    double* y = Y + i * out;
    const double* x = X + i * in;
    for (std::size_t k = 0; k < in; ++k) {
      const double xv = x[k];
      const double* w = W + k * out;
      for (std::size_t j = 0; j < out; ++j) y[j] += xv * w[j];
    }
  }
}

// dW[in x out] += X^T[in x n] * dY[n x out]
void matmul_tn_add(const double* X, const double* dY, double* dW, std::size_t n, std::size_t in,
                   std::size_t out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = X + i * in;
    const double* dy = dY + i * out;
    for (std::size_t k = 0; k < in; ++k) {
      const double xv = x[k];
      if (xv == 0.0) continue;
      double* dw = dW + k * out;
      for (std::size_t j = 0; j < out; ++j) dw[j] += xv * dy[j];
    }
  }
}

// dX[n x in] += dY[n x out] * W^T[out x in]
void matmul_nt_add(const double* dY, const double* W, double* dX, std::size_t n, std::size_t in,
                   std::size_t out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* dy = dY + i * out;
    double* dx = dX + i * in;
    for (std::size_t k = 0; k < in; ++k) {
      const double* w = W + k * out;
      double acc = 0.0;
      for (std::size_t j = 0; j < out; ++j) acc += dy[j] * w[j];
      dx[k] += acc;
    }
  }
}

void linear(const double* X, const double* W, const double* b, double* Y, std::size_t n,
            std::size_t in, std::size_t out) {
  for (std::size_t i = 0; i < n; ++i) std::copy(b, b + out, Y + i * out);
  matmul_add(X, W, Y, n, in, out);
}

void linear_backward(const double* X, const double* W, const double* dY, double* dW, double* db,
                     double* dX, std::size_t n, std::size_t in, std::size_t out) {
  matmul_tn_add(X, dY, dW, n, in, out);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < out; ++j) db[j] += dY[i * out + j];
  if (dX) matmul_nt_add(dY, W, dX, n, in, out);
}

void layer_norm(const double* X, const double* g, const double* b, double* Y, double* mean,
                double* rstd, std::size_t n, std::size_t d) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = X + i * d;
    double mu = 0.0;
    for (std::size_t k = 0; k < d; ++k) mu += x[k];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t k = 0; k < d; ++k) var += (x[k] - mu) * (x[k] - mu);
    var /= static_cast<double>(d);
    const double rs = 1.0 / std::sqrt(var + kLayerNormEps);
    mean[i] = mu;
    rstd[i] = rs;
    double* y = Y + i * d;
    for (std::size_t k = 0; k < d; ++k) y[k] = (x[k] - mu) * rs * g[k] + b[k];
  }
}

void layer_norm_backward(const double* X, const double* g, const double* mean, const double* rstd,
                         const double* dY, double* dg, double* db, double* dX, std::size_t n,
                         std::size_t d) {
  std::vector<double> xhat(d), dxhat(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = X + i * d;
    const double* dy = dY + i * d;
    double mean_dxhat = 0.0;
    double mean_dxhat_xhat = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      xhat[k] = (x[k] - mean[i]) * rstd[i];
      dg[k] += dy[k] * xhat[k];
      db[k] += dy[k];
      dxhat[k] = dy[k] * g[k];
      mean_dxhat += dxhat[k];
      mean_dxhat_xhat += dxhat[k] * xhat[k];
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    double* dx = dX + i * d;
    for (std::size_t k = 0; k < d; ++k)
      dx[k] += rstd[i] * (dxhat[k] - mean_dxhat - xhat[k] * mean_dxhat_xhat);
  }
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_grad(double x) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// Which keys each query row may look at; identical for every head and layer
// of one example.
struct AttentionPattern {
  std::vector<std::size_t> lo, hi, offset;  // inclusive key range per row
  std::size_t total = 0;
};

AttentionPattern make_pattern(const EncoderConfig& c, std::size_t n) {
  AttentionPattern p;
  p.lo.resize(n);
  p.hi.resize(n);
  p.offset.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (c.attention_mode == AttentionMode::kFull || (c.global_cls && i == 0)) {
      p.lo[i] = 0;
      p.hi[i] = n - 1;
    } else {
      p.lo[i] = i > c.window ? i - c.window : 0;
      p.hi[i] = std::min(n - 1, i + c.window);
    }
    p.offset[i] = p.total;
    p.total += p.hi[i] - p.lo[i] + 1;
  }
  return p;
}

struct LayerCache {
  std::vector<double> x_in, ln1, ln1_mean, ln1_rstd, q, k, v, probs, attn, drop1;
  std::vector<double> x_mid, ln2, ln2_mean, ln2_rstd, u, g, drop2;
};

struct ExampleCache {
  std::size_t n = 0;
  AttentionPattern pattern;
  std::vector<LayerCache> layers;
  std::vector<double> x_out;  // residual stream after the last layer
  std::vector<double> hf;     // final LayerNorm of the [CLS] row
  double hf_mean = 0.0, hf_rstd = 0.0;
  double logit = 0.0;
};

void fill_dropout(std::vector<double>& mask, std::size_t size, const EncoderConfig& c,
                  const ForwardOptions& opt) {
  mask.assign(size, 1.0);
  if (!opt.training || c.dropout_rate <= 0.0) return;
  if (!opt.rng) throw Error("dropout requires a random generator");
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  const double keep = 1.0 - c.dropout_rate;
  for (auto& m : mask) m = dist(*opt.rng) < keep ? 1.0 / keep : 0.0;
}

void check_input(const EncoderConfig& c, const PackedInput& in, std::size_t n) {
  if (in.ids.size() != n || in.attention_mask.size() != n || in.segment_mask.size() != n)
    throw Error("batch inputs must share one padded length");
  if (n == 0 || n > c.max_len)
    throw Error("sequence length " + std::to_string(n) + " outside (0, " +
                std::to_string(c.max_len) + "]");
  for (std::size_t i = 0; i < n; ++i) {
    if (in.ids[i] < 0 || static_cast<std::size_t>(in.ids[i]) >= c.vocab_size)
      throw Error("token id " + std::to_string(in.ids[i]) + " outside the model vocabulary (" +
                  std::to_string(c.vocab_size) + ")");
    if (in.segment_mask[i] > 1) throw Error("segment ids must be 0 or 1");
  }
}

void forward_example(const ModelParams& params, const Layout& L, const PackedInput& in,
                     const ForwardOptions& opt, ExampleCache& cache) {
  const EncoderConfig& c = params.config();
  const double* P = params.values().data();
  const std::size_t n = in.ids.size();
  const std::size_t d = c.d_model;
  const std::size_t H = c.n_heads;
  const std::size_t dh = d / H;
  const std::size_t f = c.d_ffn;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  cache.n = n;
  cache.pattern = make_pattern(c, n);
  const auto& pat = cache.pattern;
  cache.layers.resize(c.n_layers);

  std::vector<double> x(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* te = P + L.tok + static_cast<std::size_t>(in.ids[i]) * d;
    const double* pe = P + L.pos + i * d;
    for (std::size_t k = 0; k < d; ++k) x[i * d + k] = te[k] + pe[k];
    if (L.has_seg) {
      const double* se = P + L.seg + in.segment_mask[i] * d;
      for (std::size_t k = 0; k < d; ++k) x[i * d + k] += se[k];
    }
  }

  std::vector<double> tmp(n * d);
  std::vector<double> scores;
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const LayerOffsets& o = L.layers[l];
    LayerCache& lc = cache.layers[l];
    lc.x_in = x;
    lc.ln1.resize(n * d);
    lc.ln1_mean.resize(n);
    lc.ln1_rstd.resize(n);
    layer_norm(x.data(), P + o.ln1_g, P + o.ln1_b, lc.ln1.data(), lc.ln1_mean.data(),
               lc.ln1_rstd.data(), n, d);
    lc.q.resize(n * d);
    lc.k.resize(n * d);
    lc.v.resize(n * d);
    linear(lc.ln1.data(), P + o.wq, P + o.bq, lc.q.data(), n, d, d);
    linear(lc.ln1.data(), P + o.wk, P + o.bk, lc.k.data(), n, d, d);
    linear(lc.ln1.data(), P + o.wv, P + o.bv, lc.v.data(), n, d, d);

    lc.probs.assign(H * pat.total, 0.0);
    lc.attn.assign(n * d, 0.0);
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t ho = h * dh;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = pat.lo[i], hi = pat.hi[i];
        scores.assign(hi - lo + 1, 0.0);
        double mx = -INFINITY;
        bool any = false;
        for (std::size_t j = lo; j <= hi; ++j) {
          if (!in.attention_mask[j]) continue;
          double s = 0.0;
          for (std::size_t t = 0; t < dh; ++t) s += lc.q[i * d + ho + t] * lc.k[j * d + ho + t];
          s *= scale;
          scores[j - lo] = s;
          mx = std::max(mx, s);
          any = true;
          if (opt.stats) ++opt.stats->score_evaluations;
        }
        if (!any) continue;
        double* prow = lc.probs.data() + h * pat.total + pat.offset[i];
        double denom = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) {
          if (!in.attention_mask[j]) continue;
          prow[j - lo] = std::exp(scores[j - lo] - mx);
          denom += prow[j - lo];
        }
        double* out = lc.attn.data() + i * d + ho;
        for (std::size_t j = lo; j <= hi; ++j) {
          if (!in.attention_mask[j]) continue;
          prow[j - lo] /= denom;
          const double pj = prow[j - lo];
          for (std::size_t t = 0; t < dh; ++t) out[t] += pj * lc.v[j * d + ho + t];
        }
      }
    }

    linear(lc.attn.data(), P + o.wo, P + o.bo, tmp.data(), n, d, d);
    fill_dropout(lc.drop1, n * d, c, opt);
    lc.x_mid.resize(n * d);
    for (std::size_t t = 0; t < n * d; ++t) lc.x_mid[t] = x[t] + lc.drop1[t] * tmp[t];

    lc.ln2.resize(n * d);
    lc.ln2_mean.resize(n);
    lc.ln2_rstd.resize(n);
    layer_norm(lc.x_mid.data(), P + o.ln2_g, P + o.ln2_b, lc.ln2.data(), lc.ln2_mean.data(),
               lc.ln2_rstd.data(), n, d);
    lc.u.resize(n * f);
    linear(lc.ln2.data(), P + o.w1, P + o.b1, lc.u.data(), n, d, f);
    lc.g.resize(n * f);
    for (std::size_t t = 0; t < n * f; ++t) lc.g[t] = gelu(lc.u[t]);
    linear(lc.g.data(), P + o.w2, P + o.b2, tmp.data(), n, f, d);
    fill_dropout(lc.drop2, n * d, c, opt);
    for (std::size_t t = 0; t < n * d; ++t) x[t] = lc.x_mid[t] + lc.drop2[t] * tmp[t];
  }

  cache.x_out = x;
  cache.hf.resize(d);
  layer_norm(x.data(), P + L.lnf_g, P + L.lnf_b, cache.hf.data(), &cache.hf_mean,
             &cache.hf_rstd, 1, d);
  double z = P[L.cls_b];
  for (std::size_t k = 0; k < d; ++k) z += P[L.cls_w + k] * cache.hf[k];
  cache.logit = z;
}

// Adds d(loss)/d(params) * dz into grad.
void backward_example(const ModelParams& params, const Layout& L, const PackedInput& in,
                      const ExampleCache& cache, double dz, std::vector<double>& grad) {
  const EncoderConfig& c = params.config();
  const double* P = params.values().data();
  double* G = grad.data();
  const std::size_t n = cache.n;
  const std::size_t d = c.d_model;
  const std::size_t H = c.n_heads;
  const std::size_t dh = d / H;
  const std::size_t f = c.d_ffn;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto& pat = cache.pattern;

  G[L.cls_b] += dz;
  std::vector<double> dhf(d);
  for (std::size_t k = 0; k < d; ++k) {
    G[L.cls_w + k] += dz * cache.hf[k];
    dhf[k] = dz * P[L.cls_w + k];
  }
  std::vector<double> dx(n * d, 0.0);
  layer_norm_backward(cache.x_out.data(), P + L.lnf_g, &cache.hf_mean, &cache.hf_rstd,
                      dhf.data(), G + L.lnf_g, G + L.lnf_b, dx.data(), 1, d);

  std::vector<double> dtmp(n * d), dg(n * f), du(n * f), dh2(n * d), dattn(n * d);
  std::vector<double> dq(n * d), dk(n * d), dv(n * d), dh1(n * d), dprow;
  for (std::size_t l = c.n_layers; l-- > 0;) {
    const LayerOffsets& o = L.layers[l];
    const LayerCache& lc = cache.layers[l];

    // x_out = x_mid + drop2 * (g W2 + b2)
    for (std::size_t t = 0; t < n * d; ++t) dtmp[t] = dx[t] * lc.drop2[t];
    std::fill(dg.begin(), dg.end(), 0.0);
    linear_backward(lc.g.data(), P + o.w2, dtmp.data(), G + o.w2, G + o.b2, dg.data(), n, f, d);
    for (std::size_t t = 0; t < n * f; ++t) du[t] = dg[t] * gelu_grad(lc.u[t]);
    std::fill(dh2.begin(), dh2.end(), 0.0);
    linear_backward(lc.ln2.data(), P + o.w1, du.data(), G + o.w1, G + o.b1, dh2.data(), n, d, f);
    // dx now plays the role of d x_mid.
    layer_norm_backward(lc.x_mid.data(), P + o.ln2_g, lc.ln2_mean.data(), lc.ln2_rstd.data(),
                        dh2.data(), G + o.ln2_g, G + o.ln2_b, dx.data(), n, d);

    // x_mid = x_in + drop1 * (attn Wo + bo)
    for (std::size_t t = 0; t < n * d; ++t) dtmp[t] = dx[t] * lc.drop1[t];
    std::fill(dattn.begin(), dattn.end(), 0.0);
    linear_backward(lc.attn.data(), P + o.wo, dtmp.data(), G + o.wo, G + o.bo, dattn.data(), n,
                    d, d);

    std::fill(dq.begin(), dq.end(), 0.0);
    std::fill(dk.begin(), dk.end(), 0.0);
    std::fill(dv.begin(), dv.end(), 0.0);
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t ho = h * dh;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = pat.lo[i], hi = pat.hi[i];
        const double* prow = lc.probs.data() + h * pat.total + pat.offset[i];
        const double* dout = dattn.data() + i * d + ho;
        dprow.assign(hi - lo + 1, 0.0);
        double row_dot = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) {
          const double pj = prow[j - lo];
          if (pj == 0.0) continue;
          double s = 0.0;
          for (std::size_t t = 0; t < dh; ++t) {
            s += dout[t] * lc.v[j * d + ho + t];
            dv[j * d + ho + t] += pj * dout[t];
          }
          dprow[j - lo] = s;
          row_dot += pj * s;
        }
        for (std::size_t j = lo; j <= hi; ++j) {
          const double pj = prow[j - lo];
          if (pj == 0.0) continue;
          const double ds = pj * (dprow[j - lo] - row_dot) * scale;
          for (std::size_t t = 0; t < dh; ++t) {
            dq[i * d + ho + t] += ds * lc.k[j * d + ho + t];
            dk[j * d + ho + t] += ds * lc.q[i * d + ho + t];
          }
        }
      }
    }

    std::fill(dh1.begin(), dh1.end(), 0.0);
    linear_backward(lc.ln1.data(), P + o.wq, dq.data(), G + o.wq, G + o.bq, dh1.data(), n, d, d);
    linear_backward(lc.ln1.data(), P + o.wk, dk.data(), G + o.wk, G + o.bk, dh1.data(), n, d, d);
    linear_backward(lc.ln1.data(), P + o.wv, dv.data(), G + o.wv, G + o.bv, dh1.data(), n, d, d);
    layer_norm_backward(lc.x_in.data(), P + o.ln1_g, lc.ln1_mean.data(), lc.ln1_rstd.data(),
                        dh1.data(), G + o.ln1_g, G + o.ln1_b, dx.data(), n, d);
  }

  for (std::size_t i = 0; i < n; ++i) {
    double* gt = G + L.tok + static_cast<std::size_t>(in.ids[i]) * d;
    double* gp = G + L.pos + i * d;
    for (std::size_t k = 0; k < d; ++k) {
      gt[k] += dx[i * d + k];
      gp[k] += dx[i * d + k];
    }
    if (L.has_seg) {
      double* gs = G + L.seg + in.segment_mask[i] * d;
      for (std::size_t k = 0; k < d; ++k) gs[k] += dx[i * d + k];
    }
  }
}

std::size_t batch_length(const EncoderConfig& c, std::span<const PackedInput> batch) {
  if (batch.empty()) return 0;
  const std::size_t n = batch.front().ids.size();
  for (const auto& in : batch) check_input(c, in, n);
  return n;
}

}  // namespace

std::vector<double> forward(const ModelParams& params, std::span<const PackedInput> batch,
                            const ForwardOptions& options) {
  const EncoderConfig& c = params.config();
  batch_length(c, batch);
  const Layout L = build_layout(c, nullptr);
  if (L.total != params.values().size()) throw Error("parameter buffer does not match config");
  std::vector<double> logits;
  logits.reserve(batch.size());
  ExampleCache cache;
  for (const auto& in : batch) {
    forward_example(params, L, in, options, cache);
    logits.push_back(cache.logit);
  }
  return logits;
}

double accumulate_gradient(const ModelParams& params, std::span<const PackedInput> batch,
                           std::vector<double>& grad, const ForwardOptions& options) {
  const EncoderConfig& c = params.config();
  batch_length(c, batch);
  const Layout L = build_layout(c, nullptr);
  if (grad.size() != params.values().size()) throw Error("gradient buffer size mismatch");
  double loss = 0.0;
  ExampleCache cache;
  for (const auto& in : batch) {
    if (!in.label) throw Error("training example " + in.id + " has no label");
    forward_example(params, L, in, options, cache);
    loss += bce_loss(cache.logit, *in.label);
    const double dz = sigmoid(cache.logit) - static_cast<double>(*in.label);
    backward_example(params, L, in, cache, dz, grad);
  }
  return loss;
}

Gradients backward(const ModelParams& params, std::span<const PackedInput> batch) {
  if (batch.empty()) throw Error("backward on an empty batch");
  Gradients g;
  g.values.assign(params.values().size(), 0.0);
  g.loss = accumulate_gradient(params, batch, g.values) / static_cast<double>(batch.size());
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& v : g.values) v *= inv;
  return g;
}

// ---------------------------------------------------------------------------
// Optimization

Adam::Adam(std::size_t n, double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& values, std::span<const double> grad, double lr) {
  if (grad.size() != values.size() || values.size() != m_.size())
    throw Error("Adam state size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < values.size(); ++k) {
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grad[k];
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grad[k] * grad[k];
    const double mhat = m_[k] / c1;
    const double vhat = v_[k] / c2;
    values[k] -= lr * mhat / (std::sqrt(vhat) + epsilon_);
  }
}

double GradientAccumulator::add(const ModelParams& params, std::span<const PackedInput> micro_batch,
                                const ForwardOptions& options) {
  const double loss = accumulate_gradient(params, micro_batch, sum_, options);
  count_ += micro_batch.size();
  return loss;
}

std::vector<double> GradientAccumulator::mean() const {
  if (count_ == 0) throw Error("no gradients accumulated");
  std::vector<double> out(sum_);
  const double inv = 1.0 / static_cast<double>(count_);
  for (auto& v : out) v *= inv;
  return out;
}

void GradientAccumulator::reset() {
  std::fill(sum_.begin(), sum_.end(), 0.0);
  count_ = 0;
}

nlohmann::json EpochRecord::to_json() const {
  return {{"epoch", epoch}, {"train_loss", train_loss}, {"valid", valid.to_json()},
          {"improved", improved}};
}

nlohmann::json TrainResult::history_json() const {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : history) epochs.push_back(e.to_json());
  return {{"best_epoch", best_epoch},
          {"best_valid_f1", best_f1},
          {"optimizer_steps", optimizer_steps},
          {"epochs", epochs}};
}

std::vector<Prediction> predict(const ModelParams& params, std::span<const PackedInput> batch,
                                std::size_t batch_size) {
  std::vector<Prediction> out;
  out.reserve(batch.size());
  batch_size = std::max<std::size_t>(batch_size, 1);
  for (std::size_t start = 0; start < batch.size(); start += batch_size) {
    const std::size_t end = std::min(batch.size(), start + batch_size);
    std::vector<PackedInput> chunk(batch.begin() + static_cast<std::ptrdiff_t>(start),
                                   batch.begin() + static_cast<std::ptrdiff_t>(end));
    pad_batch(chunk);
    for (double z : forward(params, chunk)) {
      const double s = sigmoid(z);
      out.push_back({s, s >= 0.5 ? 1 : 0});
    }
  }
  return out;
}

Metrics evaluate(const ModelParams& params, std::span<const PackedInput> data) {
  const auto preds = predict(params, data);
  std::vector<int> p, y;
  p.reserve(data.size());
  y.reserve(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (!data[k].label) throw Error("evaluation example " + data[k].id + " has no label");
    p.push_back(preds[k].label);
    y.push_back(*data[k].label);
  }
  return compute(p, y);
}

TrainResult train(std::span<const PackedInput> train_set, std::span<const PackedInput> valid_set,
                  const TrainConfig& tc, const EncoderConfig& ec, std::uint64_t seed,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  tc.validate();
  ec.validate();
  if (train_set.empty()) throw Error("empty training set");
  if (valid_set.empty()) throw Error("empty validation set");

  ModelParams params = ModelParams::initialize(ec, seed);
  std::mt19937_64 rng(seed ^ 0x5DEECE66DULL);
  Adam adam(params.values().size(), tc.beta1, tc.beta2, tc.epsilon);
  GradientAccumulator acc(params.values().size());
  ForwardOptions opt;
  opt.training = ec.dropout_rate > 0.0;
  opt.rng = &rng;

  TrainResult result;
  result.best = params;
  double best_f1 = -1.0;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t micro = 0;
    for (std::size_t start = 0; start < order.size(); start += tc.micro_batch) {
      const std::size_t end = std::min(order.size(), start + tc.micro_batch);
      std::vector<PackedInput> mb;
      mb.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) mb.push_back(train_set[order[k]]);
      pad_batch(mb);
      loss_sum += acc.add(params, mb, opt);
      if (++micro == tc.accumulation_steps) {
        adam.step(params.values(), acc.mean(), tc.learning_rate);
        acc.reset();
        micro = 0;
      }
    }
    if (acc.examples() > 0) {
      adam.step(params.values(), acc.mean(), tc.learning_rate);
      acc.reset();
    }
    if (!params.all_finite()) throw Error("training diverged: non-finite parameters");

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_set.size());
    rec.valid = evaluate(params, valid_set);
    const double f1 = rec.valid.f1.value_or(0.0);
    if (f1 > best_f1) {
      best_f1 = f1;
      result.best = params;
      result.best_epoch = epoch;
      rec.improved = true;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (epoch - result.best_epoch >= tc.patience) break;
  }
  result.best_f1 = best_f1;
  result.optimizer_steps = adam.steps();
  return result;
}

}  // namespace coco
