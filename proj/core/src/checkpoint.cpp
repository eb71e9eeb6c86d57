#include "coco/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "coco/error.hpp"

namespace coco {
namespace {

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t k = 0; k < sizeof(T); ++k) {
    out.push_back(static_cast<char>(u & 0xFF));
    u = static_cast<U>(u >> 8);
  }
}

class Reader {
 public:
  Reader(const std::string& data, const std::filesystem::path& path)
      : data_(data), path_(path) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k)
      u |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(data_[pos_ + k]))
           << (8 * k);
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error(path_.string() + ": truncated model file");
  }

  const std::string& data_;
  std::filesystem::path path_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_model_file(const std::filesystem::path& path, const ModelFile& file) {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(file.kind));
  const std::string meta = file.meta.dump();
  put_le<std::uint64_t>(out, meta.size());
  out += meta;
  put_le<std::uint64_t>(out, file.values.size());
  for (double v : file.values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw Error("write failed for " + path.string());
}

ModelFile read_model_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open model file " + path.string());
  const std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  Reader r(data, path);
  if (r.bytes(sizeof(kCheckpointMagic)) != std::string(kCheckpointMagic, sizeof(kCheckpointMagic)))
    throw Error(path.string() + ": not a coco model file");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw Error(path.string() + ": unsupported format version " + std::to_string(version));
  ModelFile file;
  const auto kind = r.get<std::uint32_t>();
  if (kind > static_cast<std::uint32_t>(ModelKind::kBow))
    throw Error(path.string() + ": unknown model kind " + std::to_string(kind));
  file.kind = static_cast<ModelKind>(kind);
  const auto meta_len = r.get<std::uint64_t>();
  try {
    file.meta = nlohmann::json::parse(r.bytes(meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": corrupt header: " + e.what());
  }
  const auto count = r.get<std::uint64_t>();
  if (count > data.size() / 8) throw Error(path.string() + ": truncated model file");
  file.values.resize(count);
  for (auto& v : file.values) v = std::bit_cast<double>(r.get<std::uint64_t>());
  if (!r.at_end()) throw Error(path.string() + ": trailing bytes after parameters");
  return file;
}

void save_checkpoint(const std::filesystem::path& path, const EncoderCheckpoint& ckpt) {
  ModelFile file;
  file.kind = ModelKind::kEncoder;
  file.meta = {{"config", ckpt.params.config().to_json()},
               {"mode", to_string(ckpt.mode)},
               {"max_len", ckpt.max_len},
               {"extra", ckpt.extra}};
  file.values = ckpt.params.values();
  write_model_file(path, file);
}

EncoderCheckpoint load_checkpoint(const std::filesystem::path& path) {
  ModelFile file = read_model_file(path);
  if (file.kind != ModelKind::kEncoder)
    throw Error(path.string() + ": not an encoder checkpoint");
  EncoderCheckpoint ckpt;
  try {
    ckpt.params = ModelParams(EncoderConfig::from_json(file.meta.at("config")));
    ckpt.mode = parse_mode(file.meta.at("mode").get<std::string>());
    ckpt.max_len = file.meta.at("max_len").get<std::size_t>();
    ckpt.extra = file.meta.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": bad checkpoint header: " + e.what());
  }
  if (file.values.size() != ckpt.params.values().size())
    throw Error(path.string() + ": parameter count " + std::to_string(file.values.size()) +
                " does not match config (" + std::to_string(ckpt.params.values().size()) + ")");
  ckpt.params.values() = std::move(file.values);
  return ckpt;
}

}  // namespace coco
