#include "ermar/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ermar::harness {

namespace {

double percentile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

std::optional<LatencyStats> summarize_latency(std::vector<double> samples_ms) {
  if (samples_ms.empty()) return std::nullopt;
  std::sort(samples_ms.begin(), samples_ms.end());
  LatencyStats s;
  s.samples = samples_ms.size();
  s.p50 = percentile(samples_ms, 0.50);
  s.p95 = percentile(samples_ms, 0.95);
  s.mean = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) / static_cast<double>(s.samples);
  if (s.samples > 1) {
    double ss = 0.0;
    for (double x : samples_ms) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.samples - 1));
  }
  return s;
}

Json to_json(const EvalReport& r) {
  Json j;
  j["label"] = r.label;
  j["precision_at_k"] = optional_number(r.precision_at_k);
  j["recall_at_k"] = optional_number(r.recall_at_k);
  j["semantic_pair_mrr"] = optional_number(r.semantic_pair_mrr);
  if (r.latency_ms) {
    j["latency_ms"] = {{"p50", r.latency_ms->p50},
                       {"p95", r.latency_ms->p95},
                       {"mean", r.latency_ms->mean},
                       {"stddev", r.latency_ms->stddev},
                       {"samples", r.latency_ms->samples}};
  } else {
    j["latency_ms"] = nullptr;
  }
  j["throughput_tokens_per_sec"] = optional_number(r.throughput_tokens_per_sec);
  j["bytes_per_token"] = optional_number(r.bytes_per_token);
  j["config"] = r.config;
  Json timing = Json::array();
  for (const char* f : kTimingFields) timing.push_back(f);
  j["timing_fields"] = std::move(timing);
  return j;
}

Json deterministic_view(const EvalReport& report) {
  Json j = to_json(report);
  for (const char* f : kTimingFields) j.erase(f);
  j.erase("timing_fields");
  return j;
}

std::string to_jsonl(std::span<const EvalReport> reports) {
  std::string out;
  for (const auto& r : reports) {
    out += to_json(r).dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace ermar::harness
