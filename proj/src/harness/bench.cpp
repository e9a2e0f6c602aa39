#include "ermar/harness/bench.hpp"

#include <chrono>

#include "ermar/errors.hpp"
#include "ermar/harness/synthetic_kv.hpp"
#include "ermar/random.hpp"
#include "ermar/retrieval.hpp"
#include "ermar/snapshot.hpp"

namespace ermar::harness {

namespace {

using Clock = std::chrono::steady_clock;

std::string bench_token(std::size_t i) { return "t" + std::to_string(i); }

std::vector<Query> make_queries(const BenchConfig& cfg, const EmbedderConfig& embedder) {
  Rng rng(mix64(cfg.seed ^ 0x9u));
  std::vector<Query> queries;
  for (std::size_t q = 0; q < cfg.queries; ++q) {
    std::vector<std::string> tokens;
    for (int t = 0; t < 4; ++t) tokens.push_back(bench_token(rng.below(cfg.vocab_size)));
    queries.push_back(Query::make(join_tokens(tokens), embedder, cfg.k));
  }
  return queries;
}

std::optional<LatencyStats> time_queries(const MemoryBank& bank, const std::vector<Query>& queries,
                                         const BenchConfig& cfg) {
  if (queries.empty()) return std::nullopt;
  for (std::size_t i = 0; i < cfg.warmup; ++i) retrieve(bank, queries[i % queries.size()]);
  const std::size_t samples = std::max(queries.size(), cfg.min_samples);
  std::vector<double> latencies;
  latencies.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const auto start = Clock::now();
    const auto result = retrieve(bank, queries[i % queries.size()]);
    latencies.push_back(std::chrono::duration<double, std::milli>(Clock::now() - start).count());
    if (result.hits.size() > bank.size()) throw Error("retrieval returned more hits than entries");
  }
  return summarize_latency(std::move(latencies));
}

}  // namespace

void BenchConfig::validate() const {
  bank.validate();
  if (context_lengths.empty()) throw ConfigError("at least one context length is required");
  for (std::size_t len : context_lengths) {
    if (len == 0) throw ConfigError("context lengths must be positive");
  }
  if (k == 0) throw ConfigError("k must be positive");
  if (vocab_size == 0) throw ConfigError("vocab_size must be positive");
}

Json BenchConfig::to_json() const {
  return Json{{"capacity_pairs", bank.capacity_pairs},
              {"tau", bank.tau},
              {"d_model", bank.d_model},
              {"d_ret", bank.d_ret()},
              {"queries", queries},
              {"min_samples", min_samples},
              {"warmup", warmup},
              {"k", k},
              {"seed", seed},
              {"vocab_size", vocab_size}};
}

std::vector<EvalReport> run_benchmark(const BenchConfig& cfg) {
  cfg.validate();
  const auto queries = make_queries(cfg, cfg.bank.embedder);
  const SyntheticKvConfig kv{cfg.seed};
  std::vector<EvalReport> reports;

  for (std::size_t length : cfg.context_lengths) {
    MemoryBank bank(cfg.bank);
    Rng rng(mix64(cfg.seed ^ mix64(length)));
    std::vector<std::string> tokens;
    tokens.reserve(length);
    for (std::size_t i = 0; i < length; ++i) tokens.push_back(bench_token(rng.below(cfg.vocab_size)));

    const auto start = Clock::now();
    for (std::size_t s = 0; s < length; s += cfg.bank.tau) {
      const std::size_t e = std::min(length, s + cfg.bank.tau);
      insert_synthetic_chunk(bank, 0, {s, e}, std::span<const std::string>(tokens.data() + s, e - s), kv);
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();

    std::size_t stored_tokens = 0;
    for (const auto& entry : bank.entries()) stored_tokens += entry.pairs();
    const std::size_t bytes = snapshot_size(bank);

    EvalReport report;
    report.label = "context=" + std::to_string(length);
    report.latency_ms = time_queries(bank, queries, cfg);
    if (seconds > 0.0) report.throughput_tokens_per_sec = static_cast<double>(length) / seconds;
    report.bytes_per_token = static_cast<double>(bytes) / static_cast<double>(stored_tokens);
    report.config = cfg.to_json();
    report.config["context_tokens"] = length;
    report.config["stored_tokens"] = stored_tokens;
    report.config["entries"] = bank.size();
    report.config["resident_bytes"] = bytes;
    reports.push_back(std::move(report));
  }
  return reports;
}

EvalReport bench_existing_bank(const MemoryBank& bank, const BenchConfig& cfg) {
  const auto queries = make_queries(cfg, bank.config().embedder);
  std::size_t stored_tokens = 0;
  for (const auto& entry : bank.entries()) stored_tokens += entry.pairs();
  const std::size_t bytes = snapshot_size(bank);

  EvalReport report;
  report.label = "bank";
  report.latency_ms = time_queries(bank, queries, cfg);
  if (stored_tokens > 0) report.bytes_per_token = static_cast<double>(bytes) / static_cast<double>(stored_tokens);
  report.config = cfg.to_json();
  report.config["stored_tokens"] = stored_tokens;
  report.config["entries"] = bank.size();
  report.config["resident_bytes"] = bytes;
  return report;
}

}  // namespace ermar::harness
