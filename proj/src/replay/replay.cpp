#include "madirl/replay/replay.hpp"

#include "madirl/common/binary_io.hpp"
#include "madirl/common/errors.hpp"

namespace madirl::replay {

namespace {
constexpr std::string_view kDemoMagic = "MADIRLDM";
}

ReplayBuffer::ReplayBuffer(GameSpec spec, std::size_t capacity) : spec_(std::move(spec)), capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("replay buffer capacity must be positive");
  const auto n = static_cast<std::size_t>(spec_.n_agents);
  obs_.resize(n);
  next_obs_.resize(n);
  actions_.resize(n);
  rewards_.resize(n);
}

std::size_t ReplayBuffer::slot(std::size_t logical) const {
  return size_ < capacity_ ? logical : (head_ + logical) % capacity_;
}

void ReplayBuffer::push(const JointTransition& tr) {
  tr.validate(spec_);
  const auto n = static_cast<std::size_t>(spec_.n_agents);
  if (size_ < capacity_) {
    for (std::size_t i = 0; i < n; ++i) {
      obs_[i].insert(obs_[i].end(), tr.obs[i].begin(), tr.obs[i].end());
      next_obs_[i].insert(next_obs_[i].end(), tr.next_obs[i].begin(), tr.next_obs[i].end());
      actions_[i].push_back(tr.actions[i]);
      rewards_[i].push_back(tr.gt_rewards[i]);
    }
    done_.push_back(tr.done ? 1 : 0);
    step_.push_back(tr.step_index);
    ++size_;
    return;
  }
  const std::size_t s = head_;
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = static_cast<std::size_t>(spec_.obs_dims[i]);
    std::copy(tr.obs[i].begin(), tr.obs[i].end(), obs_[i].begin() + static_cast<std::ptrdiff_t>(s * d));
    std::copy(tr.next_obs[i].begin(), tr.next_obs[i].end(), next_obs_[i].begin() + static_cast<std::ptrdiff_t>(s * d));
    actions_[i][s] = tr.actions[i];
    rewards_[i][s] = tr.gt_rewards[i];
  }
  done_[s] = tr.done ? 1 : 0;
  step_[s] = tr.step_index;
  head_ = (head_ + 1) % capacity_;
}

JointTransition ReplayBuffer::at(std::size_t k) const {
  if (k >= size_) throw UsageError("replay: index " + std::to_string(k) + " out of range");
  const std::size_t s = slot(k);
  JointTransition tr;
  const auto n = static_cast<std::size_t>(spec_.n_agents);
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = static_cast<std::size_t>(spec_.obs_dims[i]);
    const auto off = static_cast<std::ptrdiff_t>(s * d);
    tr.obs.emplace_back(obs_[i].begin() + off, obs_[i].begin() + off + static_cast<std::ptrdiff_t>(d));
    tr.next_obs.emplace_back(next_obs_[i].begin() + off, next_obs_[i].begin() + off + static_cast<std::ptrdiff_t>(d));
    tr.actions.push_back(actions_[i][s]);
    tr.gt_rewards.push_back(rewards_[i][s]);
  }
  tr.done = done_[s] != 0;
  tr.step_index = step_[s];
  return tr;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch_size, std::mt19937_64& rng) const {
  if (size_ == 0) throw UsageError("replay: cannot sample from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> idx(batch_size);
  for (auto& k : idx) k = pick(rng);
  return idx;
}

Batch ReplayBuffer::gather(const std::vector<std::size_t>& logical) const {
  const auto n = static_cast<std::size_t>(spec_.n_agents);
  const auto b = static_cast<Eigen::Index>(logical.size());
  Batch out;
  out.size = static_cast<int>(logical.size());
  out.obs.resize(n);
  out.next_obs.resize(n);
  out.actions.assign(n, std::vector<int>(logical.size()));
  out.gt_rewards.assign(n, std::vector<float>(logical.size()));
  out.done.resize(logical.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = static_cast<Eigen::Index>(spec_.obs_dims[i]);
    out.obs[i].resize(b, d);
    out.next_obs[i].resize(b, d);
  }
  for (Eigen::Index r = 0; r < b; ++r) {
    const auto k = logical[static_cast<std::size_t>(r)];
    if (k >= size_) throw UsageError("replay: index " + std::to_string(k) + " out of range");
    const std::size_t s = slot(k);
    for (std::size_t i = 0; i < n; ++i) {
      const auto d = static_cast<std::size_t>(spec_.obs_dims[i]);
      std::copy_n(obs_[i].data() + s * d, d, out.obs[i].row(r).data());
      std::copy_n(next_obs_[i].data() + s * d, d, out.next_obs[i].row(r).data());
      out.actions[i][static_cast<std::size_t>(r)] = actions_[i][s];
      out.gt_rewards[i][static_cast<std::size_t>(r)] = rewards_[i][s];
    }
    out.done[static_cast<std::size_t>(r)] = done_[s];
  }
  return out;
}

Batch ReplayBuffer::sample(std::size_t batch_size, std::mt19937_64& rng) const {
  return gather(sample_indices(batch_size, rng));
}

std::vector<JointTransition> ReplayBuffer::sample_transitions(std::size_t batch_size, std::mt19937_64& rng) const {
  std::vector<JointTransition> out;
  for (auto k : sample_indices(batch_size, rng)) out.push_back(at(k));
  return out;
}

void ReplayBuffer::clear() {
  for (auto& v : obs_) v.clear();
  for (auto& v : next_obs_) v.clear();
  for (auto& v : actions_) v.clear();
  for (auto& v : rewards_) v.clear();
  done_.clear();
  step_.clear();
  size_ = 0;
  head_ = 0;
}

// ---------------------------------------------------------------------------

void DemoSet::validate() const {
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const auto& ep = episodes[e];
    if (static_cast<int>(ep.size()) != spec.episode_length) {
      throw ShapeError("demos: episode " + std::to_string(e) + " has " + std::to_string(ep.size()) + " steps, expected " +
                       std::to_string(spec.episode_length));
    }
    for (std::size_t t = 0; t < ep.size(); ++t) {
      ep[t].validate(spec);
      if (ep[t].step_index != static_cast<int>(t)) {
        throw ShapeError("demos: episode " + std::to_string(e) + " steps out of order");
      }
    }
  }
}

std::size_t DemoSet::transition_count() const {
  std::size_t n = 0;
  for (const auto& ep : episodes) n += ep.size();
  return n;
}

void DemoSet::fill(ReplayBuffer& buffer) const {
  if (!(buffer.spec() == spec)) {
    throw SpecMismatchError("demos for '" + spec.env_id + "' cannot fill a buffer for '" + buffer.spec().env_id + "'");
  }
  for (const auto& ep : episodes)
    for (const auto& tr : ep) buffer.push(tr);
}

std::vector<std::uint8_t> encode_demos(const DemoSet& demos) {
  demos.validate();
  const auto n = static_cast<std::size_t>(demos.spec.n_agents);
  std::vector<std::uint8_t> payload;
  for (const auto& ep : demos.episodes) {
    for (const auto& tr : ep) {
      for (std::size_t i = 0; i < n; ++i) {
        for (float v : tr.obs[i]) io::put_f32(payload, v);
        io::put_u32(payload, static_cast<std::uint32_t>(tr.actions[i]));
        for (float v : tr.next_obs[i]) io::put_f32(payload, v);
        io::put_f32(payload, tr.gt_rewards[i]);
      }
      payload.push_back(tr.done ? 1 : 0);
      io::put_u32(payload, static_cast<std::uint32_t>(tr.step_index));
    }
  }
  nlohmann::json header = {{"format_version", kDemoFormatVersion},
                           {"env_id", demos.spec.env_id},
                           {"spec", demos.spec.to_json()},
                           {"count", demos.episodes.size()},
                           {"episode_length", demos.spec.episode_length},
                           {"payload_crc32", io::crc32(payload)},
                           {"meta", demos.meta}};
  const std::string text = header.dump();
  std::vector<std::uint8_t> out;
  io::put_bytes(out, kDemoMagic);
  io::put_u32(out, kDemoFormatVersion);
  io::put_u64(out, text.size());
  io::put_bytes(out, text);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

DemoSet decode_demos(std::span<const std::uint8_t> bytes) {
  io::Reader r(bytes);
  if (r.remaining() < kDemoMagic.size() || r.bytes(kDemoMagic.size()) != kDemoMagic) {
    throw FormatError("demos: bad magic, not a demonstration file");
  }
  const auto version = r.u32();
  if (version != kDemoFormatVersion) throw FormatError("demos: unsupported format version " + std::to_string(version));
  const auto header_len = r.u64();
  if (header_len > r.remaining()) throw FormatError("demos: truncated header");
  nlohmann::json header;
  DemoSet demos;
  std::size_t count = 0;
  try {
    header = nlohmann::json::parse(r.bytes(header_len));
    demos.spec = GameSpec::from_json(header.at("spec"));
    count = header.at("count").get<std::size_t>();
    demos.meta = header.value("meta", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("demos: malformed header: ") + e.what());
  }
  if (header.value("env_id", "") != demos.spec.env_id) throw FormatError("demos: header env id disagrees with spec");
  const auto payload = r.view(r.remaining());
  if (io::crc32(payload) != header.at("payload_crc32").get<std::uint32_t>()) {
    throw FormatError("demos: payload checksum mismatch (corrupt or truncated file)");
  }
  io::Reader pr(payload);
  const auto n = static_cast<std::size_t>(demos.spec.n_agents);
  demos.episodes.resize(count);
  for (auto& ep : demos.episodes) {
    ep.resize(static_cast<std::size_t>(demos.spec.episode_length));
    for (auto& tr : ep) {
      tr.obs.resize(n);
      tr.next_obs.resize(n);
      tr.actions.resize(n);
      tr.gt_rewards.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto d = static_cast<std::size_t>(demos.spec.obs_dims[i]);
        tr.obs[i].resize(d);
        for (auto& v : tr.obs[i]) v = pr.f32();
        tr.actions[i] = static_cast<int>(pr.u32());
        tr.next_obs[i].resize(d);
        for (auto& v : tr.next_obs[i]) v = pr.f32();
        tr.gt_rewards[i] = pr.f32();
      }
      tr.done = pr.u8() != 0;
      tr.step_index = static_cast<int>(pr.u32());
    }
  }
  if (pr.remaining() != 0) throw FormatError("demos: trailing bytes after the last episode");
  demos.validate();
  return demos;
}

void save_demos(const DemoSet& demos, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_demos(demos));
}

DemoSet load_demos(const std::filesystem::path& path) { return decode_demos(io::read_file(path)); }

DemoSet load_demos(const std::filesystem::path& path, const GameSpec& expected) {
  auto demos = load_demos(path);
  if (!(demos.spec == expected)) {
    throw SpecMismatchError("demos in " + path.string() + " were generated for '" + demos.spec.env_id +
                            "', but this run uses '" + expected.env_id + "'");
  }
  return demos;
}

}  // namespace madirl::replay
