#include "ermar/memory_bank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "ermar/errors.hpp"
#include "ermar/random.hpp"

namespace ermar {

void BankConfig::validate() const {
  embedder.validate();
  if (tau == 0) throw ConfigError("tau must be positive");
  if (capacity_pairs == 0) throw ConfigError("capacity_pairs must be positive");
  if (tau > capacity_pairs) throw ConfigError("tau must not exceed capacity_pairs");
  if (d_model == 0) throw ConfigError("d_model must be positive");
  if (!(usage_decay > 0.0 && usage_decay < 1.0)) throw ConfigError("usage_decay must be in (0, 1)");
  if (!(usage_boost >= 0.0) || !std::isfinite(usage_boost)) throw ConfigError("usage_boost must be >= 0");
  if (!(score_floor >= 0.0) || !std::isfinite(score_floor)) throw ConfigError("score_floor must be >= 0");
}

MemoryBank::MemoryBank(BankConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t d_ret = cfg_.d_ret();
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg_.d_model));
  const std::uint64_t key = mix64(cfg_.projection_seed);
  projection_ = Matrix(cfg_.d_model, d_ret);
  for (std::size_t i = 0; i < cfg_.d_model; ++i) {
    for (std::size_t j = 0; j < d_ret; ++j) {
      projection_(i, j) = scale * counter_sign(key, i * d_ret + j);
    }
  }
}

MemoryBank MemoryBank::restore(BankConfig cfg, std::uint64_t clock, std::vector<MemoryEntry> entries) {
  MemoryBank bank(cfg);
  std::size_t total = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (i > 0 && e.chunk_id <= entries[i - 1].chunk_id) {
      throw ConfigError("restored entries must have strictly increasing chunk ids");
    }
    if (e.chunk_id >= clock || e.inserted_at >= clock) {
      throw ConfigError("restored entry is newer than the bank clock");
    }
    if (e.pairs() == 0 || e.pairs() > cfg.tau) throw GroupSizeError("restored entry pair count outside [1, tau]");
    if (e.keys.cols() != cfg.d_model || e.values.rows() != e.keys.rows() ||
        e.values.cols() != cfg.d_model || e.pair_scores.size() != e.pairs()) {
      throw DimensionError("restored entry shape mismatch");
    }
    if (e.embedding.dim() != cfg.d_ret()) throw DimensionError("restored embedding dimension mismatch");
    if (!(e.usage >= 0.0 && e.usage <= 1.0)) throw ConfigError("restored usage outside [0, 1]");
    total += e.pairs();
  }
  if (total > cfg.capacity_pairs) throw ConfigError("restored bank exceeds capacity");
  bank.entries_ = std::move(entries);
  bank.total_pairs_ = total;
  bank.clock_ = clock;
  return bank;
}

const MemoryEntry* MemoryBank::find(ChunkId id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const MemoryEntry& e, ChunkId v) { return e.chunk_id < v; });
  if (it == entries_.end() || it->chunk_id != id) return nullptr;
  return &*it;
}

std::vector<double> MemoryBank::project(const Embedding& embedding) const {
  if (embedding.dim() != cfg_.d_ret()) throw DimensionError("project: embedding dimension mismatch");
  std::vector<double> out(cfg_.d_model);
  for (std::size_t i = 0; i < cfg_.d_model; ++i) out[i] = dot(projection_.row(i), embedding.values());
  return out;
}

ChunkId MemoryBank::insert_chunk(std::uint64_t doc_id, TokenSpan span, std::string_view chunk_text,
                                 Matrix keys, Matrix values) {
  return insert_embedded(doc_id, span, embed_text(chunk_text, cfg_.embedder), std::move(keys),
                         std::move(values));
}

ChunkId MemoryBank::insert_embedded(std::uint64_t doc_id, TokenSpan span, Embedding embedding,
                                    Matrix keys, Matrix values) {
  const std::size_t n = keys.rows();
  if (n == 0 || n > cfg_.tau) {
    throw GroupSizeError("chunk has " + std::to_string(n) + " pairs; expected 1.." + std::to_string(cfg_.tau));
  }
  if (keys.cols() != cfg_.d_model) throw DimensionError("key width does not match d_model");
  if (values.rows() != keys.rows() || values.cols() != keys.cols()) {
    throw DimensionError("keys and values differ in shape");
  }
  if (embedding.dim() != cfg_.d_ret()) throw DimensionError("embedding dimension does not match d_ret");

  // Score before touching the bank so a failed insert leaves it unchanged.
  RelevanceScores scores = relevance_scores(project(embedding), keys);
  for (double x : values.data()) {
    if (!std::isfinite(x)) throw NumericError("non-finite value");
  }

  if (cfg_.score_floor > 0.0) prune_below_threshold(cfg_.score_floor);
  if (total_pairs_ + n > cfg_.capacity_pairs) evict(n);

  MemoryEntry entry;
  entry.chunk_id = clock_;
  entry.doc_id = doc_id;
  entry.span = span;
  entry.embedding = std::move(embedding);
  entry.keys = std::move(keys);
  entry.values = std::move(values);
  entry.pair_scores = std::move(scores);
  entry.usage = 0.0;
  entry.inserted_at = clock_;
  entries_.push_back(std::move(entry));
  total_pairs_ += n;
  return clock_++;
}

double MemoryBank::eviction_priority(const MemoryEntry& entry) const {
  return entry.pair_scores.max() * (1.0 + cfg_.usage_boost * entry.usage);
}

void MemoryBank::erase_at(std::size_t index) {
  total_pairs_ -= entries_[index].pairs();
  entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(index));
}

std::vector<ChunkId> MemoryBank::evict(std::size_t pairs_needed) {
  if (pairs_needed > cfg_.capacity_pairs) throw ConfigError("evict: pairs_needed exceeds capacity");
  std::vector<ChunkId> evicted;
  if (cfg_.capacity_pairs - total_pairs_ >= pairs_needed) return evicted;

  struct Candidate {
    double priority;
    std::uint64_t inserted_at;
    ChunkId id;
    std::size_t pairs;
  };
  std::vector<Candidate> order;
  order.reserve(entries_.size());
  for (const auto& e : entries_) order.push_back({eviction_priority(e), e.inserted_at, e.chunk_id, e.pairs()});
  std::sort(order.begin(), order.end(), [](const Candidate& a, const Candidate& b) {
    if (a.priority != b.priority) return a.priority < b.priority;
    return a.inserted_at < b.inserted_at;
  });

  std::size_t free_pairs = cfg_.capacity_pairs - total_pairs_;
  for (const auto& c : order) {
    if (free_pairs >= pairs_needed) break;
    evicted.push_back(c.id);
    free_pairs += c.pairs;
  }
  std::unordered_set<ChunkId> doomed(evicted.begin(), evicted.end());
  std::erase_if(entries_, [&](const MemoryEntry& e) { return doomed.contains(e.chunk_id); });
  total_pairs_ = cfg_.capacity_pairs - free_pairs;
  return evicted;
}

std::vector<ChunkId> MemoryBank::prune_below_threshold(double floor) {
  if (!(floor >= 0.0)) throw ConfigError("prune floor must be >= 0");
  std::vector<ChunkId> pruned;
  for (std::size_t i = entries_.size(); i-- > 0;) {
    if (eviction_priority(entries_[i]) < floor) {
      pruned.push_back(entries_[i].chunk_id);
      erase_at(i);
    }
  }
  std::reverse(pruned.begin(), pruned.end());
  return pruned;
}

void MemoryBank::update_usage(std::span<const ChunkId> hit_ids) {
  const std::unordered_set<ChunkId> hits(hit_ids.begin(), hit_ids.end());
  const double decay = cfg_.usage_decay;
  for (auto& e : entries_) {
    const double next = decay * e.usage + (hits.contains(e.chunk_id) ? 1.0 - decay : 0.0);
    e.usage = std::min(next, 1.0);  // rounding can land one ulp above 1
  }
}

}  // namespace ermar
