#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "almd/engine.hpp"
#include "almd/harness.hpp"

namespace almd::io {

using Bytes = std::vector<std::byte>;

inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::uint32_t kSnapshotVersion = 1;

/// CRC-32 (IEEE 802.3, as in zlib/PNG).
std::uint32_t crc32(std::span<const std::byte> data);

// Embedding file, all fields little-endian:
//   "ALMD" | u32 version | u32 dim | u64 count
//   count x (u32 label | dim x f32)
//   u32 CRC-32 of every preceding byte
Bytes encode_embeddings(const LabeledEmbeddingSet& set);
LabeledEmbeddingSet decode_embeddings(std::span<const std::byte> bytes);

// Snapshot file, all fields little-endian:
//   "ALMS" | u32 version | u32 dim | u32 th | f64 ridge | u64 classes
//   classes x (u32 id | u32 state | u64 count | dim x f64 mean)
//   dim*dim x f64 shared covariance (row-major)
//   dim x f64 background mean | dim*dim x f64 background covariance
//   u32 CRC-32 of every preceding byte
Bytes encode_snapshot(const ModelSnapshot& snapshot);
ModelSnapshot decode_snapshot(std::span<const std::byte> bytes);

/// Canonical bytes of the frozen shared model (ridge then covariance).
Bytes encode_model(const SharedGaussianModel& model);

Bytes read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

LabeledEmbeddingSet read_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path, const LabeledEmbeddingSet& set);
ModelSnapshot read_snapshot(const std::filesystem::path& path);
void write_snapshot(const std::filesystem::path& path, const ModelSnapshot& snapshot);

}  // namespace almd::io
