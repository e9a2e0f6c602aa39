#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ermar/harness/report.hpp"
#include "ermar/harness/synthetic_kv.hpp"
#include "ermar/memory_bank.hpp"
#include "ermar/retrieval.hpp"

namespace ermar::harness {

// Synthetic needle-in-a-haystack corpus. Needles mix topic tokens into
// ordinary text; "echo" distractors repeat two topic tokens, so they look
// close to a topic query by cosine while carrying little content.
struct NeedleConfig {
  std::uint64_t seed = 7;
  std::size_t n_docs = 210;  // total chunks, needles included
  std::size_t n_needles = 10;
  std::size_t k = 8;
  std::size_t n_queries = 10;
  std::size_t chunk_tokens = 32;
  std::size_t vocab_size = 2000;
  std::size_t topic_vocab = 6;
  std::size_t topic_per_needle = 4;
  std::size_t query_tokens = 3;
  double echo_fraction = 0.025;  // share of distractors that are echoes
  std::size_t embed_dim = 1024;
  std::uint64_t embed_seed = 0;
  std::size_t d_model = 64;
  SyntheticKvConfig kv{};

  /// Throws ConfigError on invalid sizes.
  void validate() const;
  Json to_json() const;
};

struct NeedleChunk {
  std::vector<std::string> tokens;
  bool relevant = false;
  bool echo = false;
};

struct NeedleCorpus {
  std::vector<NeedleChunk> chunks;  // insertion order
  std::vector<std::string> queries;
};

/// Deterministic in cfg.seed.
NeedleCorpus build_needle_corpus(const NeedleConfig& cfg);

// Built bank plus ground truth for one needle run.
struct NeedleBench {
  MemoryBank bank;
  std::vector<bool> relevant;             // indexed by chunk_id
  std::vector<std::size_t> semantic_row;  // indexed by chunk_id
  std::vector<Query> queries;
  std::size_t n_relevant = 0;
  double ingest_seconds = 0.0;
  std::size_t ingest_tokens = 0;
};

NeedleBench build_needle_bench(const NeedleConfig& cfg);

struct RetrievalQuality {
  double precision_at_k = 0.0;
  double recall_at_k = 0.0;
  double semantic_pair_mrr = 0.0;  // 0 when no relevant hit
};

/// Scores one result against the planted ground truth.
RetrievalQuality score_result(const NeedleBench& bench, const RetrievalResult& result);

/// (RSAR, uniform) reports.
std::pair<EvalReport, EvalReport> run_needle_eval(const NeedleConfig& cfg);

struct AblationMode {
  bool scoring = true;
  bool rerank = true;
  std::string label() const;
};

/// Retrieval for one mode: scoring off means retrieve_uniform; rerank then
/// reorders pairs within each hit.
RetrievalResult retrieve_mode(const MemoryBank& bank, const Query& query, AblationMode mode);

/// Four reports in the order (on,on), (on,off), (off,on), (off,off).
std::vector<EvalReport> run_ablation(const NeedleConfig& cfg);

}  // namespace ermar::harness
