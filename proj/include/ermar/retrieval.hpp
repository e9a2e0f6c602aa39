#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ermar/embedder.hpp"
#include "ermar/memory_bank.hpp"

namespace ermar {

struct Query {
  std::string text;
  Embedding embedding;
  std::size_t k = 8;

  /// Embeds `text` with the bank's embedder config. Throws ConfigError if k == 0.
  static Query make(std::string text, const EmbedderConfig& cfg, std::size_t k = 8);
};

struct RetrievalHit {
  ChunkId chunk_id = 0;
  double score = 0.0;
  std::vector<std::size_t> pair_order;  // permutation of the entry's KV rows

  bool operator==(const RetrievalHit&) const = default;
};

struct RetrievalResult {
  std::vector<RetrievalHit> hits;  // non-increasing score, ties by chunk_id

  /// Ids in hit order; pass to MemoryBank::update_usage after the event.
  std::vector<ChunkId> hit_ids() const;

  bool operator==(const RetrievalResult&) const = default;
};

struct RetrieveOptions {
  bool rerank = true;  // false keeps storage order (identity pair_order)
};

/// Score-weighted TopK: cosine(query, e) * max_j s_j over every entry, then
/// each hit's pairs ordered by relevance to the projected query.
RetrievalResult retrieve(const MemoryBank& bank, const Query& query, RetrieveOptions options = {});

/// Pointwise re-ranking: replaces each hit's pair_order with its KV rows
/// sorted by relevance to the projected query. Hit order is untouched.
void rerank(const MemoryBank& bank, const Query& query, RetrievalResult& result);

/// Baseline: cosine similarity alone, identity pair order.
RetrievalResult retrieve_uniform(const MemoryBank& bank, const Query& query);

}  // namespace ermar
