#include "madirl/numerics/checkpoint.hpp"

#include "madirl/common/binary_io.hpp"
#include "madirl/common/errors.hpp"

namespace madirl::numerics {

namespace {
constexpr std::string_view kMagic = "MADIRLCK";
}

const NamedArray* Checkpoint::find(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> payload;
  nlohmann::json params = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& a : ckpt.arrays) {
    std::int64_t expected = 1;
    for (auto d : a.shape) expected *= d;
    if (expected != static_cast<std::int64_t>(a.data.size())) {
      throw ShapeError("checkpoint: array '" + a.name + "' has " + std::to_string(a.data.size()) +
                       " values for shape " + shape_string(a.shape));
    }
    for (float v : a.data) io::put_f32(payload, v);
    params.push_back({{"name", a.name}, {"shape", a.shape}, {"offset", offset}, {"count", a.data.size()}});
    offset += a.data.size();
  }
  nlohmann::json header = {{"format_version", kCheckpointFormatVersion},
                           {"dtype", "float32"},
                           {"params", params},
                           {"payload_crc32", io::crc32(payload)},
                           {"meta", ckpt.meta}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  io::put_bytes(out, kMagic);
  io::put_u32(out, kCheckpointFormatVersion);
  io::put_u64(out, text.size());
  io::put_bytes(out, text);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  io::Reader r(bytes);
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    throw FormatError("checkpoint: bad magic, not a checkpoint archive");
  }
  const auto version = r.u32();
  if (version != kCheckpointFormatVersion) {
    throw FormatError("checkpoint: unsupported format version " + std::to_string(version));
  }
  const auto header_len = r.u64();
  if (header_len > r.remaining()) throw FormatError("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.bytes(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed header: ") + e.what());
  }
  if (header.value("dtype", "") != "float32") throw FormatError("checkpoint: unsupported dtype");
  const auto payload = r.view(r.remaining());
  if (payload.size() % 4 != 0) throw FormatError("checkpoint: payload is not a whole number of float32 values");
  if (io::crc32(payload) != header.at("payload_crc32").get<std::uint32_t>()) {
    throw FormatError("checkpoint: payload checksum mismatch");
  }
  Checkpoint ckpt;
  ckpt.meta = header.value("meta", nlohmann::json::object());
  const std::uint64_t total = payload.size() / 4;
  for (const auto& p : header.at("params")) {
    NamedArray a;
    a.name = p.at("name").get<std::string>();
    a.shape = p.at("shape").get<Shape>();
    const auto off = p.at("offset").get<std::uint64_t>();
    const auto count = p.at("count").get<std::uint64_t>();
    if (off + count > total) throw FormatError("checkpoint: array '" + a.name + "' extends past the payload");
    io::Reader pr(payload.subspan(off * 4, count * 4));
    a.data.resize(count);
    for (auto& v : a.data) v = pr.f32();
    ckpt.arrays.push_back(std::move(a));
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  io::write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

template <typename T>
void append_store(Checkpoint& ckpt, const ParamStore<T>& store, const std::string& prefix) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& p = store.at(i);
    NamedArray a;
    a.name = prefix + store.name(i);
    a.shape = p.shape;
    a.data.resize(static_cast<std::size_t>(p.values.size()));
    for (Eigen::Index k = 0; k < p.values.size(); ++k) a.data[static_cast<std::size_t>(k)] = static_cast<float>(p.values.data()[k]);
    ckpt.arrays.push_back(std::move(a));
  }
}

template <typename T>
void restore_store(const Checkpoint& ckpt, ParamStore<T>& store, const std::string& prefix) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto name = prefix + store.name(i);
    const auto* a = ckpt.find(name);
    if (a == nullptr) throw FormatError("checkpoint: missing parameter '" + name + "'");
    auto& p = store.at(i);
    if (a->shape != p.shape) {
      throw ShapeError("checkpoint: parameter '" + name + "' has shape " + shape_string(a->shape) + ", expected " +
                       shape_string(p.shape));
    }
    for (Eigen::Index k = 0; k < p.values.size(); ++k) p.values.data()[k] = static_cast<T>(a->data[static_cast<std::size_t>(k)]);
  }
}

template void append_store(Checkpoint&, const ParamStore<float>&, const std::string&);
template void append_store(Checkpoint&, const ParamStore<double>&, const std::string&);
template void restore_store(const Checkpoint&, ParamStore<float>&, const std::string&);
template void restore_store(const Checkpoint&, ParamStore<double>&, const std::string&);

}  // namespace madirl::numerics
