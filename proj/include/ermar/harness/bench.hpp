#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ermar/harness/report.hpp"
#include "ermar/memory_bank.hpp"

namespace ermar::harness {

struct BenchConfig {
  BankConfig bank{};
  std::vector<std::size_t> context_lengths{1024, 2048, 4096, 16384};
  std::size_t queries = 50;
  std::size_t min_samples = 30;  // queries are cycled until this many timed samples
  std::size_t warmup = 5;
  std::size_t k = 8;
  std::uint64_t seed = 1;
  std::size_t vocab_size = 5000;

  void validate() const;
  Json to_json() const;
};

/// One report per context length: a fresh bank is filled with that many
/// synthetic tokens in tau-sized chunks, then queried. bytes_per_token is the
/// bank's snapshot size over stored tokens.
std::vector<EvalReport> run_benchmark(const BenchConfig& cfg);

/// Latency of `queries` retrievals against an existing bank.
EvalReport bench_existing_bank(const MemoryBank& bank, const BenchConfig& cfg);

}  // namespace ermar::harness
