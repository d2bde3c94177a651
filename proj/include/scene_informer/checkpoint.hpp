#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "scene_informer/tensor.hpp"

namespace scene_informer {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  nn::Shape shape;
  std::vector<float> data;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// Binary container: magic "SINFCKPT", u32 version, then length-prefixed
// sections (config JSON, parameters, optimizer moments, RNG state, counters,
// trainer state JSON). Payloads are raw little-endian float32; a round trip is
// bit-exact.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  nlohmann::json config;
  std::vector<NamedTensor> parameters;
  std::int64_t optimizer_step = 0;
  std::vector<NamedTensor> first_moments;
  std::vector<NamedTensor> second_moments;
  std::string rng_state;
  std::int64_t step = 0;
  nlohmann::json trainer_state;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
// Throws Error(kIo) on unreadable/truncated files and Error(kVersionMismatch)
// on a foreign magic or version.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::string& bytes);

}  // namespace scene_informer
