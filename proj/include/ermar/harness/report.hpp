#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ermar::harness {

using Json = nlohmann::ordered_json;

struct LatencyStats {
  double p50 = 0.0;
  double p95 = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t samples = 0;
};

/// Linear-interpolated percentiles, sample standard deviation. Empty input gives nullopt.
std::optional<LatencyStats> summarize_latency(std::vector<double> samples_ms);

// One line of harness output. Fields absent for a run are written as null.
struct EvalReport {
  std::string label;
  std::optional<double> precision_at_k;
  std::optional<double> recall_at_k;
  std::optional<double> semantic_pair_mrr;
  std::optional<LatencyStats> latency_ms;
  std::optional<double> throughput_tokens_per_sec;
  std::optional<double> bytes_per_token;
  Json config = Json::object();
};

// Fields that depend on wall-clock timing; everything else is a pure function
// of the command line.
inline constexpr const char* kTimingFields[] = {"latency_ms", "throughput_tokens_per_sec"};

Json to_json(const EvalReport& report);

/// Same record with the timing fields removed (for determinism checks and fixtures).
Json deterministic_view(const EvalReport& report);

std::string to_jsonl(std::span<const EvalReport> reports);

}  // namespace ermar::harness
