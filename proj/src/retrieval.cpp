#include "ermar/retrieval.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "ermar/errors.hpp"
#include "ermar/relevance.hpp"

namespace ermar {

namespace {

struct Scored {
  double score;
  std::size_t index;
  ChunkId id;
};

// Exhaustive scan; entries_ is kept in chunk_id order so the tie rule is a plain id compare.
template <typename ScoreFn>
std::vector<Scored> top_k(const MemoryBank& bank, std::size_t k, ScoreFn score_of) {
  const auto& entries = bank.entries();
  std::vector<Scored> scored;
  scored.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    scored.push_back({score_of(entries[i]), i, entries[i].chunk_id});
  }
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                    [](const Scored& a, const Scored& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.id < b.id;
                    });
  scored.resize(keep);
  return scored;
}

std::vector<std::size_t> identity(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  return order;
}

void check_query(const MemoryBank& bank, const Query& query) {
  if (query.k == 0) throw ConfigError("query k must be >= 1");
  if (query.embedding.dim() != bank.config().d_ret()) {
    throw DimensionError("query embedding dimension does not match bank d_ret");
  }
}

}  // namespace

Query Query::make(std::string text, const EmbedderConfig& cfg, std::size_t k) {
  if (k == 0) throw ConfigError("query k must be >= 1");
  Query q;
  q.embedding = embed_text(text, cfg);
  q.text = std::move(text);
  q.k = k;
  return q;
}

std::vector<ChunkId> RetrievalResult::hit_ids() const {
  std::vector<ChunkId> ids;
  ids.reserve(hits.size());
  for (const auto& h : hits) ids.push_back(h.chunk_id);
  return ids;
}

RetrievalResult retrieve(const MemoryBank& bank, const Query& query, RetrieveOptions options) {
  check_query(bank, query);
  RetrievalResult result;
  if (bank.empty()) return result;

  const auto top = top_k(bank, query.k, [&](const MemoryEntry& e) {
    return combined_score(cosine_similarity(query.embedding, e.embedding), e.pair_scores);
  });

  const auto& entries = bank.entries();
  for (const auto& s : top) {
    result.hits.push_back({s.id, s.score, identity(entries[s.index].pairs())});
  }
  if (options.rerank) rerank(bank, query, result);
  return result;
}

void rerank(const MemoryBank& bank, const Query& query, RetrievalResult& result) {
  if (result.hits.empty()) return;
  check_query(bank, query);
  const auto projected = bank.project(query.embedding);
  for (auto& hit : result.hits) {
    const MemoryEntry* entry = bank.find(hit.chunk_id);
    if (entry == nullptr) throw Error("rerank: chunk " + std::to_string(hit.chunk_id) + " is not in the bank");
    hit.pair_order = rank_descending(relevance_scores(projected, entry->keys));
  }
}

RetrievalResult retrieve_uniform(const MemoryBank& bank, const Query& query) {
  check_query(bank, query);
  RetrievalResult result;
  const auto top = top_k(bank, query.k, [&](const MemoryEntry& e) {
    return cosine_similarity(query.embedding, e.embedding);
  });
  const auto& entries = bank.entries();
  for (const auto& s : top) {
    result.hits.push_back({s.id, s.score, identity(entries[s.index].pairs())});
  }
  return result;
}

}  // namespace ermar
