#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "coco/editseq.hpp"
#include "coco/encoder.hpp"
#include "coco/packing.hpp"
#include "coco/subword.hpp"

namespace {

std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t n, std::size_t alphabet) {
  std::vector<std::string> out(n);
  for (auto& t : out) t = "t" + std::to_string(rng() % alphabet);
  return out;
}

// Two token streams sharing most of their content, like a method revision.
void BM_Diff(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  auto a = random_tokens(rng, n, 50);
  auto b = a;
  for (std::size_t k = 0; k < n / 10; ++k) b[rng() % n] = "changed";
  for (auto _ : state) benchmark::DoNotOptimize(coco::diff(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Diff)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_BpeEncode(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const std::string letters = "abcdefghijklmnop";
  auto word = [&] {
    std::string w(3 + rng() % 8, 'a');
    for (auto& c : w) c = letters[rng() % letters.size()];
    return w;
  };
  std::vector<std::vector<std::string>> corpus(2000);
  for (auto& line : corpus)
    for (int k = 0; k < 8; ++k) line.push_back(word());
  const auto vocab = coco::train_bpe(corpus, static_cast<std::size_t>(state.range(0)));
  std::vector<std::string> text;
  for (int k = 0; k < 1000; ++k) text.push_back(word());
  for (auto _ : state) benchmark::DoNotOptimize(vocab.encode(text));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_BpeEncode)->Arg(500)->Arg(2000);

// Forward pass on one long input; the counter reports score evaluations so
// the full/sliding cost ratio is visible alongside wall time.
void BM_Attention(benchmark::State& state) {
  const bool sliding = state.range(0) != 0;
  const auto len = static_cast<std::size_t>(state.range(1));
  coco::EncoderConfig ec;
  ec.vocab_size = 64;
  ec.d_model = 32;
  ec.n_layers = 1;
  ec.n_heads = 4;
  ec.d_ffn = 64;
  ec.max_len = len;
  ec.dropout_rate = 0.0;
  ec.attention_mode = sliding ? coco::AttentionMode::kSliding : coco::AttentionMode::kFull;
  ec.window = 64;
  const auto params = coco::ModelParams::initialize(ec, 0);
  std::mt19937_64 rng(3);
  std::vector<coco::PieceId> c(8), m(len);
  for (auto& v : c) v = static_cast<coco::PieceId>(4 + rng() % 60);
  for (auto& v : m) v = static_cast<coco::PieceId>(4 + rng() % 60);
  const std::vector<coco::PackedInput> batch = {coco::pack(c, m, len)};
  coco::AttentionStats stats;
  for (auto _ : state) {
    stats = {};
    benchmark::DoNotOptimize(coco::forward(params, batch, {.stats = &stats}));
  }
  state.counters["scores"] = static_cast<double>(stats.score_evaluations);
}
BENCHMARK(BM_Attention)
    ->ArgNames({"sliding", "len"})
    ->ArgsProduct({{0, 1}, {256, 512, 1024}})
    ->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
