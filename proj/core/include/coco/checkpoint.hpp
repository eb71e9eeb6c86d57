#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "coco/encoder.hpp"

namespace coco {

inline constexpr char kCheckpointMagic[8] = {'C', 'O', 'C', 'O', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class ModelKind : std::uint32_t { kEncoder = 0, kSvm = 1, kBow = 2 };

// On-disk layout, all integers little-endian:
//   magic[8] | u32 version | u32 kind | u64 meta_len | meta (JSON text)
//   | u64 count | count x f64
// `meta` carries the model configuration; `values` the parameters in their
// declared order.
struct ModelFile {
  ModelKind kind = ModelKind::kEncoder;
  nlohmann::json meta;
  std::vector<double> values;
};

void write_model_file(const std::filesystem::path& path, const ModelFile& file);
ModelFile read_model_file(const std::filesystem::path& path);

struct EncoderCheckpoint {
  ModelParams params;
  InputMode mode = InputMode::kPostHoc;
  std::size_t max_len = kFullAttentionMaxLen;
  nlohmann::json extra;  // free-form provenance (run config echo, history)
};

void save_checkpoint(const std::filesystem::path& path, const EncoderCheckpoint& ckpt);
// Throws when the file is not an encoder checkpoint or the parameter count
// disagrees with the stored config.
EncoderCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace coco
