#include "ermar/harness/needle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ermar/errors.hpp"
#include "ermar/random.hpp"
#include "ermar/snapshot.hpp"

namespace ermar::harness {

namespace {

using Clock = std::chrono::steady_clock;

std::string common_token(std::size_t i) { return "w" + std::to_string(i); }
std::string topic_token(std::size_t i) { return "qz" + std::to_string(i) + "needle"; }

// k distinct values from [0, n), in draw order.
std::vector<std::size_t> sample_distinct(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

BankConfig needle_bank_config(const NeedleConfig& cfg) {
  BankConfig bank;
  bank.embedder.dim = cfg.embed_dim;
  bank.embedder.seed = cfg.embed_seed;
  bank.embedder.feature_buckets = std::max<std::size_t>(4096, cfg.embed_dim);
  bank.d_model = cfg.d_model;
  bank.projection_seed = cfg.seed;
  bank.tau = std::max<std::size_t>(bank.tau, cfg.chunk_tokens);
  bank.capacity_pairs = std::max(bank.capacity_pairs, cfg.n_docs * cfg.chunk_tokens);
  return bank;
}

}  // namespace

void NeedleConfig::validate() const {
  if (n_docs == 0) throw ConfigError("n_docs must be positive");
  if (n_needles > n_docs) throw ConfigError("n_needles must not exceed n_docs");
  if (k == 0) throw ConfigError("k must be positive");
  if (chunk_tokens == 0) throw ConfigError("chunk_tokens must be positive");
  if (vocab_size == 0) throw ConfigError("vocab_size must be positive");
  if (topic_vocab == 0) throw ConfigError("topic_vocab must be positive");
  if (topic_per_needle == 0 || topic_per_needle > topic_vocab || topic_per_needle > chunk_tokens) {
    throw ConfigError("topic_per_needle must be in [1, min(topic_vocab, chunk_tokens)]");
  }
  if (query_tokens == 0 || query_tokens > topic_vocab) throw ConfigError("query_tokens must be in [1, topic_vocab]");
  if (!(echo_fraction >= 0.0 && echo_fraction <= 1.0)) throw ConfigError("echo_fraction must be in [0, 1]");
  needle_bank_config(*this).validate();
}

Json NeedleConfig::to_json() const {
  return Json{{"seed", seed},
              {"n_docs", n_docs},
              {"n_needles", n_needles},
              {"k", k},
              {"n_queries", n_queries},
              {"chunk_tokens", chunk_tokens},
              {"vocab_size", vocab_size},
              {"topic_vocab", topic_vocab},
              {"topic_per_needle", topic_per_needle},
              {"query_tokens", query_tokens},
              {"echo_fraction", echo_fraction},
              {"embed_dim", embed_dim},
              {"embed_seed", embed_seed},
              {"d_model", d_model},
              {"kv_seed", kv.seed},
              {"semantic_gain", kv.semantic_gain}};
}

NeedleCorpus build_needle_corpus(const NeedleConfig& cfg) {
  cfg.validate();
  Rng rng(mix64(cfg.seed));
  NeedleCorpus corpus;

  const std::size_t n_distractors = cfg.n_docs - cfg.n_needles;
  const auto n_echo = static_cast<std::size_t>(std::floor(cfg.echo_fraction * static_cast<double>(n_distractors)));

  std::vector<NeedleChunk> chunks;
  chunks.reserve(cfg.n_docs);
  for (std::size_t i = 0; i < cfg.n_needles; ++i) {
    NeedleChunk c;
    c.relevant = true;
    for (std::size_t t : sample_distinct(rng, cfg.topic_vocab, cfg.topic_per_needle)) {
      c.tokens.push_back(topic_token(t));
    }
    while (c.tokens.size() < cfg.chunk_tokens) c.tokens.push_back(common_token(rng.below(cfg.vocab_size)));
    // Topic tokens land at random positions.
    for (std::size_t j = c.tokens.size(); j > 1; --j) std::swap(c.tokens[j - 1], c.tokens[rng.below(j)]);
    chunks.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < n_distractors; ++i) {
    NeedleChunk c;
    if (i < n_echo) {
      c.echo = true;
      const auto pair = sample_distinct(rng, cfg.topic_vocab, std::min<std::size_t>(2, cfg.topic_vocab));
      for (std::size_t j = 0; j < cfg.chunk_tokens; ++j) c.tokens.push_back(topic_token(pair[rng.below(pair.size())]));
    } else {
      for (std::size_t j = 0; j < cfg.chunk_tokens; ++j) c.tokens.push_back(common_token(rng.below(cfg.vocab_size)));
    }
    chunks.push_back(std::move(c));
  }
  // Interleave needles with distractors.
  for (std::size_t j = chunks.size(); j > 1; --j) std::swap(chunks[j - 1], chunks[rng.below(j)]);
  corpus.chunks = std::move(chunks);

  for (std::size_t q = 0; q < cfg.n_queries; ++q) {
    std::vector<std::string> tokens;
    for (std::size_t t : sample_distinct(rng, cfg.topic_vocab, cfg.query_tokens)) tokens.push_back(topic_token(t));
    corpus.queries.push_back(join_tokens(tokens));
  }
  return corpus;
}

NeedleBench build_needle_bench(const NeedleConfig& cfg) {
  const NeedleCorpus corpus = build_needle_corpus(cfg);
  NeedleBench bench{MemoryBank(needle_bank_config(cfg)), {}, {}, {}, 0, 0.0, 0};

  const auto start = Clock::now();
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < corpus.chunks.size(); ++i) {
    const auto& chunk = corpus.chunks[i];
    const TokenSpan span{offset, offset + chunk.tokens.size()};
    offset = span.end;
    std::size_t semantic_row = 0;
    const ChunkId id = insert_synthetic_chunk(bench.bank, i, span, chunk.tokens, cfg.kv, &semantic_row);
    bench.relevant.resize(id + 1, false);
    bench.semantic_row.resize(id + 1, 0);
    bench.relevant[id] = chunk.relevant;
    bench.semantic_row[id] = semantic_row;
    bench.n_relevant += chunk.relevant ? 1 : 0;
    bench.ingest_tokens += chunk.tokens.size();
  }
  bench.ingest_seconds = std::chrono::duration<double>(Clock::now() - start).count();

  for (const auto& text : corpus.queries) bench.queries.push_back(Query::make(text, bench.bank.config().embedder, cfg.k));
  return bench;
}

RetrievalQuality score_result(const NeedleBench& bench, const RetrievalResult& result) {
  RetrievalQuality q;
  std::size_t found = 0;
  double reciprocal_sum = 0.0;
  for (const auto& hit : result.hits) {
    if (hit.chunk_id >= bench.relevant.size() || !bench.relevant[hit.chunk_id]) continue;
    ++found;
    const auto& order = hit.pair_order;
    const auto pos = std::find(order.begin(), order.end(), bench.semantic_row[hit.chunk_id]) - order.begin();
    reciprocal_sum += 1.0 / static_cast<double>(pos + 1);
  }
  if (!result.hits.empty()) q.precision_at_k = static_cast<double>(found) / static_cast<double>(result.hits.size());
  if (bench.n_relevant > 0) q.recall_at_k = static_cast<double>(found) / static_cast<double>(bench.n_relevant);
  if (found > 0) q.semantic_pair_mrr = reciprocal_sum / static_cast<double>(found);
  return q;
}

std::string AblationMode::label() const {
  return std::string("scoring=") + (scoring ? "on" : "off") + ",rerank=" + (rerank ? "on" : "off");
}

RetrievalResult retrieve_mode(const MemoryBank& bank, const Query& query, AblationMode mode) {
  if (mode.scoring) return retrieve(bank, query, RetrieveOptions{mode.rerank});
  RetrievalResult result = retrieve_uniform(bank, query);
  if (mode.rerank) rerank(bank, query, result);
  return result;
}

namespace {

EvalReport evaluate_mode(const NeedleBench& bench, const NeedleConfig& cfg, AblationMode mode,
                         std::string label) {
  std::vector<double> latencies;
  double precision = 0.0, recall = 0.0, mrr = 0.0;
  for (const auto& query : bench.queries) {
    const auto start = Clock::now();
    const auto result = retrieve_mode(bench.bank, query, mode);
    latencies.push_back(std::chrono::duration<double, std::milli>(Clock::now() - start).count());
    const auto quality = score_result(bench, result);
    precision += quality.precision_at_k;
    recall += quality.recall_at_k;
    mrr += quality.semantic_pair_mrr;
  }
  EvalReport report;
  report.label = std::move(label);
  const auto n = static_cast<double>(bench.queries.size());
  if (!bench.queries.empty()) {
    report.precision_at_k = precision / n;
    report.recall_at_k = recall / n;
    report.semantic_pair_mrr = mrr / n;
  }
  report.latency_ms = summarize_latency(std::move(latencies));
  if (bench.ingest_seconds > 0.0) {
    report.throughput_tokens_per_sec = static_cast<double>(bench.ingest_tokens) / bench.ingest_seconds;
  }
  if (bench.ingest_tokens > 0) {
    report.bytes_per_token = static_cast<double>(snapshot_size(bench.bank)) / static_cast<double>(bench.ingest_tokens);
  }
  report.config = cfg.to_json();
  report.config["scoring"] = mode.scoring;
  report.config["rerank"] = mode.rerank;
  return report;
}

}  // namespace

std::pair<EvalReport, EvalReport> run_needle_eval(const NeedleConfig& cfg) {
  const NeedleBench bench = build_needle_bench(cfg);
  return {evaluate_mode(bench, cfg, {true, true}, "rsar"), evaluate_mode(bench, cfg, {false, false}, "uniform")};
}

std::vector<EvalReport> run_ablation(const NeedleConfig& cfg) {
  const NeedleBench bench = build_needle_bench(cfg);
  std::vector<EvalReport> reports;
  for (bool scoring : {true, false}) {
    for (bool rerank : {true, false}) {
      const AblationMode mode{scoring, rerank};
      reports.push_back(evaluate_mode(bench, cfg, mode, mode.label()));
    }
  }
  return reports;
}

}  // namespace ermar::harness
