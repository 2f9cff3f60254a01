#include "scs/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace scs {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'S', '1'};

template <typename U>
void put_le(std::ostream& out, U value) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get_le(std::istream& in, const std::filesystem::path& path) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw CheckpointError(path.string() + ": truncated header");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

std::uint32_t float_bits(float f) { return std::bit_cast<std::uint32_t>(f); }

}  // namespace

const Tensor<float>* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

const Tensor<float>& Checkpoint::get(const std::string& name) const {
  const auto* t = find(name);
  if (!t) throw CheckpointError("checkpoint has no tensor '" + name + "'");
  return *t;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["meta"] = ckpt.meta;
  header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    header["tensors"].push_back({{"name", name}, {"dtype", "f32"}, {"shape", t.shape()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(t.size()) * 4;
  }
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    out.write(kMagic, 4);
    put_le<std::uint32_t>(out, kCheckpointVersion);
    put_le<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& entry : ckpt.tensors) {
      for (float v : entry.second.data()) put_le<std::uint32_t>(out, float_bits(v));
    }
    if (!out) throw CheckpointError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw CheckpointError(path.string() + ": not a checkpoint (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw CheckpointError(path.string() + ": checkpoint version " + std::to_string(version) + ", this build reads " +
                          std::to_string(kCheckpointVersion));
  }
  const auto length = get_le<std::uint64_t>(in, path);
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) throw CheckpointError(path.string() + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path.string() + ": malformed header: " + e.what());
  }

  const auto payload_start = in.tellg();
  Checkpoint ckpt;
  ckpt.meta = header.value("meta", nlohmann::json::object());
  for (const auto& entry : header.at("tensors")) {
    if (entry.at("dtype") != "f32") throw CheckpointError(path.string() + ": unsupported dtype " + entry.at("dtype").dump());
    Shape shape = entry.at("shape").get<Shape>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    in.seekg(payload_start + static_cast<std::streamoff>(offset));
    std::vector<float> data(static_cast<std::size_t>(numel(shape)));
    std::vector<unsigned char> raw(data.size() * 4);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
      throw CheckpointError(path.string() + ": truncated payload for " + entry.at("name").get<std::string>());
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(raw[i * 4 + b]) << (8 * b);
      data[i] = std::bit_cast<float>(bits);
    }
    ckpt.tensors.emplace_back(entry.at("name").get<std::string>(), Tensor<float>(std::move(shape), std::move(data)));
  }
  return ckpt;
}

nlohmann::json to_json(const model::ScsNetConfig& c) {
  return {{"base_channels", c.base_channels}, {"deep_channels", c.deep_channels},
          {"attn_qk_divisor", c.attn_qk_divisor}, {"pyramid_levels", c.pyramid_levels},
          {"sr_blocks", c.sr_blocks},           {"cpm_hidden", c.cpm_hidden},
          {"cpm_layers", c.cpm_layers},         {"input_height", c.input_height},
          {"input_width", c.input_width},       {"disc_base", c.disc_base},
          {"slope", c.slope}};
}

model::ScsNetConfig model_config_from_json(const nlohmann::json& j) {
  model::ScsNetConfig c;
  c.base_channels = j.at("base_channels");
  c.deep_channels = j.at("deep_channels");
  c.attn_qk_divisor = j.at("attn_qk_divisor");
  c.pyramid_levels = j.at("pyramid_levels");
  c.sr_blocks = j.at("sr_blocks");
  c.cpm_hidden = j.at("cpm_hidden");
  c.cpm_layers = j.at("cpm_layers");
  c.input_height = j.at("input_height");
  c.input_width = j.at("input_width");
  c.disc_base = j.at("disc_base");
  c.slope = j.at("slope");
  return c;
}

template <typename T>
void export_params(const ParamStore<T>& store, Checkpoint& ckpt) {
  for (const auto& e : store.entries()) ckpt.tensors.emplace_back(e.name, cast<float>(e.tensor.detach()));
}

template <typename T>
void import_params(ParamStore<T>& store, const Checkpoint& ckpt) {
  for (const auto& e : store.entries()) {
    const auto& src = ckpt.get(e.name);
    if (src.shape() != e.tensor.shape()) {
      throw CheckpointError("parameter " + e.name + " has shape " + to_string(src.shape()) + " in the checkpoint, " +
                            to_string(e.tensor.shape()) + " in the model");
    }
    auto dst = store.get(e.name).mutable_data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(src.data()[i]);
  }
}

template void export_params(const ParamStore<float>&, Checkpoint&);
template void export_params(const ParamStore<double>&, Checkpoint&);
template void import_params(ParamStore<float>&, const Checkpoint&);
template void import_params(ParamStore<double>&, const Checkpoint&);

}  // namespace scs
