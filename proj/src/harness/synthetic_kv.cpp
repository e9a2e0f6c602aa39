#include "ermar/harness/synthetic_kv.hpp"

#include <unordered_set>

#include "ermar/random.hpp"

namespace ermar::harness {

double distinct_ratio(std::span<const std::string> tokens) {
  if (tokens.empty()) return 0.0;
  const std::unordered_set<std::string> distinct(tokens.begin(), tokens.end());
  return static_cast<double>(distinct.size()) / static_cast<double>(tokens.size());
}

SyntheticKv synthesize_kv(const MemoryBank& bank, const Embedding& embedding,
                          std::span<const std::string> tokens, std::uint64_t chunk_index,
                          const SyntheticKvConfig& cfg) {
  const std::size_t n = tokens.size();
  const std::size_t d = bank.config().d_model;
  Rng rng(mix64(cfg.seed ^ mix64(chunk_index)));

  SyntheticKv kv{Matrix(n, d), Matrix(n, d), 0};
  if (n == 0) return kv;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) kv.keys(i, c) = cfg.key_noise * rng.normal();
    for (std::size_t c = 0; c < d; ++c) kv.values(i, c) = cfg.value_scale * rng.normal();
  }
  kv.semantic_row = static_cast<std::size_t>(rng.below(n));
  const auto projected = bank.project(embedding);
  const double gain = cfg.semantic_gain * distinct_ratio(tokens);
  auto row = kv.keys.row(kv.semantic_row);
  for (std::size_t c = 0; c < d; ++c) row[c] = gain * projected[c];
  return kv;
}

ChunkId insert_synthetic_chunk(MemoryBank& bank, std::uint64_t doc_id, TokenSpan span,
                               std::span<const std::string> tokens, const SyntheticKvConfig& cfg,
                               std::size_t* semantic_row) {
  Embedding embedding = embed_tokens(tokens, bank.config().embedder);
  // The bank clock is the id the chunk is about to receive, so KVs are a function of (seed, id).
  auto kv = synthesize_kv(bank, embedding, tokens, bank.clock(), cfg);
  if (semantic_row != nullptr) *semantic_row = kv.semantic_row;
  return bank.insert_embedded(doc_id, span, std::move(embedding), std::move(kv.keys), std::move(kv.values));
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace ermar::harness
