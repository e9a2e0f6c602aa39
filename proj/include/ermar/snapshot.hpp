#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ermar/memory_bank.hpp"

namespace ermar {

// Binary bank snapshot, all fields little-endian:
//
//   "RSAR" | u32 version
//   header: u64 d_ret, d_model, tau, capacity_pairs, projection_seed,
//           embed_seed, feature_buckets | f64 usage_decay, usage_boost,
//           score_floor | u64 clock, entry_count
//   per entry (ascending chunk_id):
//           u64 chunk_id, doc_id, span_start, span_end, inserted_at, n_pairs
//           f64 embedding[d_ret], keys[n*d_model], values[n*d_model],
//               pair_scores[n], usage
//   u64 CRC-64/XZ of every preceding byte
inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderBytes = 4 + 4 + 7 * 8 + 3 * 8 + 2 * 8;
inline constexpr std::size_t kSnapshotTrailerBytes = 8;

/// CRC-64/XZ (ECMA-182 polynomial, reflected, init and xorout all ones).
std::uint64_t crc64(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_bank(const MemoryBank& bank);

/// Throws FormatError (with byte offset) on bad magic, version, checksum,
/// truncation or inconsistent contents. Never returns a partial bank.
MemoryBank decode_bank(std::span<const std::uint8_t> bytes);

/// Exact encoded size, computed without encoding.
std::size_t snapshot_size(const MemoryBank& bank);

void save_bank(const MemoryBank& bank, const std::filesystem::path& path);
MemoryBank load_bank(const std::filesystem::path& path);

}  // namespace ermar
