#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "ermar/embedder.hpp"
#include "ermar/matrix.hpp"
#include "ermar/memory_bank.hpp"

namespace ermar::harness {

// Stand-in for transformer KV activations. Every row is seeded noise except
// one "semantic" key that carries the chunk's projected embedding, scaled by
// semantic_gain times the chunk's distinct-token ratio. Repetitive text thus
// gets a weak semantic key and a flat s_j distribution.
struct SyntheticKvConfig {
  std::uint64_t seed = 0;
  double semantic_gain = 32.0;
  double key_noise = 1.0;
  double value_scale = 1.0;
};

struct SyntheticKv {
  Matrix keys;
  Matrix values;
  std::size_t semantic_row = 0;
};

/// Distinct tokens over total tokens; 0 for an empty span.
double distinct_ratio(std::span<const std::string> tokens);

/// One row per token. `chunk_index` selects an independent PRNG stream.
SyntheticKv synthesize_kv(const MemoryBank& bank, const Embedding& embedding,
                          std::span<const std::string> tokens, std::uint64_t chunk_index,
                          const SyntheticKvConfig& cfg);

/// Embeds the tokens, synthesizes KVs and inserts the chunk. Returns the new id
/// and the semantic row through `semantic_row` when non-null.
ChunkId insert_synthetic_chunk(MemoryBank& bank, std::uint64_t doc_id, TokenSpan span,
                               std::span<const std::string> tokens, const SyntheticKvConfig& cfg,
                               std::size_t* semantic_row = nullptr);

std::string join_tokens(std::span<const std::string> tokens);

}  // namespace ermar::harness
