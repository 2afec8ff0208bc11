#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crossing/network.hpp"

namespace crossing {

/// Versioned binary container for the network parameters: a fixed header
/// (magic, version, config hash, layer widths, mode flags) followed by every
/// active tensor in for_each_tensor order as (name, rows, cols, row-major
/// float64 data). Round-trips bit-exactly. The full layout is documented in
/// docs/checkpoint-format.md.
inline constexpr char kCheckpointMagic[8] = {'C', 'R', 'X', 'Q', 'N', 'E', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorInfo {
  std::string name;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
};

struct CheckpointInfo {
  std::uint32_t version = 0;
  std::uint64_t config_hash = 0;
  NetworkConfig network;
  std::vector<TensorInfo> tensors;
};

void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params,
                     std::uint64_t config_hash);

/// Throws std::runtime_error with an integrity diagnostic on truncated or
/// malformed files.
NetworkParams load_checkpoint(const std::filesystem::path& path,
                              std::uint64_t* config_hash_out = nullptr);

CheckpointInfo inspect_checkpoint(const std::filesystem::path& path);

/// FNV-1a over the raw file bytes; reported in eval JSON so a result can be
/// tied to the exact checkpoint that produced it.
std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace crossing
