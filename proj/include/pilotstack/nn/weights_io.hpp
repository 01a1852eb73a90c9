#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pilotstack/nn/network.hpp"

namespace pilotstack::nn {

// Weight file layout (all integers little-endian):
//   "PSWT" | u32 schema version | u64 spec fingerprint | u32 tensor count
//   per tensor: u32 name length | name | u8 dtype (0 = f32, 1 = f64) |
//               u32 rank | u64 dims[rank] | raw data
//   u32 CRC-32 of every preceding byte

inline constexpr std::uint32_t kWeightsSchemaVersion = 1;

template <typename T>
std::vector<std::uint8_t> serialize_weights(const ModelWeights<T>& weights);

/// Throws CorruptDataError on a bad magic, version, layout or checksum.
template <typename T>
ModelWeights<T> deserialize_weights(const std::vector<std::uint8_t>& bytes);

template <typename T>
void save_weights(const ModelWeights<T>& weights, const std::filesystem::path& path);

/// Loads and checks the file against `net` (fingerprint, then shapes).
template <typename T>
ModelWeights<T> load_weights(const std::filesystem::path& path, const Network<T>& net);

/// CRC-32 of a file's contents, for reporting.
std::uint32_t file_crc32(const std::filesystem::path& path);

}  // namespace pilotstack::nn
