#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ermar/embedder.hpp"
#include "ermar/matrix.hpp"
#include "ermar/relevance.hpp"

namespace ermar {

using ChunkId = std::uint64_t;

struct TokenSpan {
  std::uint64_t start = 0;
  std::uint64_t end = 0;

  bool operator==(const TokenSpan&) const = default;
};

// One chunk-level memory group with its ranked KV pairs.
struct MemoryEntry {
  ChunkId chunk_id = 0;
  std::uint64_t doc_id = 0;
  TokenSpan span;
  Embedding embedding;
  Matrix keys;
  Matrix values;
  RelevanceScores pair_scores;  // s_j, one per KV pair
  double usage = 0.0;           // EMA of retrieval hits
  std::uint64_t inserted_at = 0;

  std::size_t pairs() const noexcept { return keys.rows(); }
};

struct BankConfig {
  std::size_t capacity_pairs = 32768;
  std::size_t tau = 128;
  std::size_t d_model = 64;
  std::uint64_t projection_seed = 0;
  EmbedderConfig embedder;  // embedder.dim is d_ret
  double usage_decay = 0.9;
  double usage_boost = 0.5;
  double score_floor = 0.0;

  std::size_t d_ret() const noexcept { return embedder.dim; }

  /// Throws ConfigError on any out-of-range field.
  void validate() const;

  bool operator==(const BankConfig&) const = default;
};

/// Capacity-bounded store of memory entries.
///
/// Capacity is counted in KV pairs. When an insertion would overflow, whole
/// entries are evicted in ascending eviction priority (older first on ties)
/// before the new entry is admitted, so the incoming entry always survives.
///
/// Not internally synchronized: const member functions may run concurrently
/// with each other; mutating calls need exclusive access.
class MemoryBank {
 public:
  explicit MemoryBank(BankConfig cfg);

  /// Rebuilds a bank from decoded snapshot state. Checks every invariant.
  static MemoryBank restore(BankConfig cfg, std::uint64_t clock, std::vector<MemoryEntry> entries);

  const BankConfig& config() const noexcept { return cfg_; }
  const std::vector<MemoryEntry>& entries() const noexcept { return entries_; }
  const MemoryEntry* find(ChunkId id) const;
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t total_pairs() const noexcept { return total_pairs_; }
  std::uint64_t clock() const noexcept { return clock_; }

  /// Embeds `chunk_text` with the bank's embedder and stores the chunk.
  ChunkId insert_chunk(std::uint64_t doc_id, TokenSpan span, std::string_view chunk_text,
                       Matrix keys, Matrix values);

  /// Same as insert_chunk with an embedding computed elsewhere.
  ChunkId insert_embedded(std::uint64_t doc_id, TokenSpan span, Embedding embedding,
                          Matrix keys, Matrix values);

  /// max_j s_j * (1 + usage_boost * usage). Higher means keep.
  double eviction_priority(const MemoryEntry& entry) const;

  /// Frees at least `pairs_needed` pair slots; returns evicted ids in eviction order.
  std::vector<ChunkId> evict(std::size_t pairs_needed);

  /// Removes every entry whose priority is strictly below `floor`.
  std::vector<ChunkId> prune_below_threshold(double floor);

  /// One retrieval event: hits move toward 1, everything else decays toward 0.
  /// Unknown ids are ignored.
  void update_usage(std::span<const ChunkId> hit_ids);

  /// Fixed random-sign map from retrieval space (d_ret) into key space (d_model).
  std::vector<double> project(const Embedding& embedding) const;

 private:
  void erase_at(std::size_t index);

  BankConfig cfg_;
  Matrix projection_;  // d_model x d_ret, entries +-1/sqrt(d_model)
  std::vector<MemoryEntry> entries_;  // ascending chunk_id
  std::size_t total_pairs_ = 0;
  std::uint64_t clock_ = 0;
};

}  // namespace ermar
