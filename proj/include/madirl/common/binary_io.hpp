#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace madirl::io {

// Little-endian encoding helpers shared by the checkpoint and demo formats.

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

inline void put_bytes(std::vector<std::uint8_t>& out, std::string_view s) {
  out.insert(out.end(), s.begin(), s.end());
}

/// Bounds-checked little-endian reader; throws FormatError on overrun.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint32_t u32();
  std::uint64_t u64();
  float f32() { return std::bit_cast<float>(u32()); }
  std::uint8_t u8();
  std::string bytes(std::size_t n);
  std::span<const std::uint8_t> view(std::size_t n);

  [[nodiscard]] std::size_t remaining() const { return data_.size() - pos_; }
  [[nodiscard]] std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Writes via a temporary file and rename so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data);

std::uint32_t crc32(std::span<const std::uint8_t> data);

}  // namespace madirl::io
