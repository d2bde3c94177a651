#include "scene_informer/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "scene_informer/error.hpp"

namespace scene_informer {

namespace {

constexpr char kMagic[8] = {'S', 'I', 'N', 'F', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  template <typename U>
  void pod(U v) {
    out_.append(reinterpret_cast<const char*>(&v), sizeof(U));
  }
  void string(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.append(s);
  }
  void tensors(const std::vector<NamedTensor>& list) {
    pod<std::uint64_t>(list.size());
    for (const auto& t : list) {
      string(t.name);
      pod<std::uint32_t>(static_cast<std::uint32_t>(t.shape.size()));
      for (const auto d : t.shape) pod<std::uint64_t>(d);
      pod<std::uint64_t>(t.data.size());
      out_.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(float));
    }
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw Error(ErrorCode::kIo, "checkpoint truncated");
  }
  template <typename U>
  U pod() {
    need(sizeof(U));
    U v;
    std::memcpy(&v, in_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }
  std::string string() {
    const auto n = pod<std::uint64_t>();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<NamedTensor> tensors() {
    std::vector<NamedTensor> list(pod<std::uint64_t>());
    for (auto& t : list) {
      t.name = string();
      t.shape.resize(pod<std::uint32_t>());
      for (auto& d : t.shape) d = pod<std::uint64_t>();
      const auto n = pod<std::uint64_t>();
      if (n != nn::shape_numel(t.shape)) throw Error(ErrorCode::kIo, "checkpoint tensor '" + t.name + "' size mismatch");
      need(n * sizeof(float));
      t.data.resize(n);
      std::memcpy(t.data.data(), in_.data() + pos_, n * sizeof(float));
      pos_ += n * sizeof(float);
    }
    return list;
  }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& c) {
  Writer w;
  for (const char ch : kMagic) w.pod(ch);
  w.pod<std::uint32_t>(c.version);
  w.string(c.config.dump());
  w.tensors(c.parameters);
  w.pod<std::int64_t>(c.optimizer_step);
  w.tensors(c.first_moments);
  w.tensors(c.second_moments);
  w.string(c.rng_state);
  w.pod<std::int64_t>(c.step);
  w.string(c.trainer_state.dump());
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  for (const char ch : kMagic) {
    if (r.pod<char>() != ch) throw Error(ErrorCode::kVersionMismatch, "not a checkpoint file (bad magic)");
  }
  Checkpoint c;
  c.version = r.pod<std::uint32_t>();
  if (c.version != kCheckpointVersion) {
    throw Error(ErrorCode::kVersionMismatch, "checkpoint version " + std::to_string(c.version) + ", expected " +
                                                 std::to_string(kCheckpointVersion));
  }
  c.config = nlohmann::json::parse(r.string());
  c.parameters = r.tensors();
  c.optimizer_step = r.pod<std::int64_t>();
  c.first_moments = r.tensors();
  c.second_moments = r.tensors();
  c.rng_state = r.string();
  c.step = r.pod<std::int64_t>();
  c.trainer_state = nlohmann::json::parse(r.string());
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  const std::string bytes = encode_checkpoint(checkpoint);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return decode_checkpoint(buffer.str());
}

}  // namespace scene_informer
