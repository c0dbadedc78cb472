#pragma once

#include "madirl/numerics/array.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace madirl::numerics {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<float> data;
};

/// In-memory form of a checkpoint archive.
///
/// On disk: 8-byte magic "MADIRLCK", u32 format version, u64 header length,
/// a JSON header {format_version, dtype, params: [{name, shape, offset, count}],
/// payload_crc32, meta}, then the concatenated little-endian float32 payloads.
struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  [[nodiscard]] const NamedArray* find(const std::string& name) const;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Appends every parameter of `store`, prefixing names with `prefix`.
template <typename T>
void append_store(Checkpoint& ckpt, const ParamStore<T>& store, const std::string& prefix = "");

/// Restores values for every parameter of `store` from `prefix + name`.
/// Missing names or shape mismatches throw.
template <typename T>
void restore_store(const Checkpoint& ckpt, ParamStore<T>& store, const std::string& prefix = "");

}  // namespace madirl::numerics
