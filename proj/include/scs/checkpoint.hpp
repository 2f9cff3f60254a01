#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scs/model.hpp"
#include "scs/tensor.hpp"

namespace scs {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File layout: "SCS1", u32 version, u64 header length, UTF-8 JSON header
/// {"tensors": [{name, dtype, shape, offset}], "meta": {...}}, then the
/// little-endian f32 payloads. Offsets are relative to the payload start.
struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  const Tensor<float>* find(const std::string& name) const;
  const Tensor<float>& get(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws CheckpointError on a bad magic, a version other than
/// kCheckpointVersion, or a truncated file.
Checkpoint read_checkpoint(const std::filesystem::path& path);

nlohmann::json to_json(const model::ScsNetConfig& config);
model::ScsNetConfig model_config_from_json(const nlohmann::json& j);

/// Copies every parameter of the store into the checkpoint (as f32).
template <typename T>
void export_params(const ParamStore<T>& store, Checkpoint& ckpt);
/// Loads every parameter of the store from the checkpoint; names and shapes
/// must match.
template <typename T>
void import_params(ParamStore<T>& store, const Checkpoint& ckpt);

}  // namespace scs
