#include "ermar/harness/chunking.hpp"

#include <algorithm>

#include "ermar/errors.hpp"

namespace ermar::harness {

void IngestConfig::validate() const {
  if (window_tokens == 0 || stride_tokens == 0 || tau == 0) {
    throw ConfigError("window, stride and tau must be positive");
  }
  if (tau > window_tokens) throw ConfigError("tau must not exceed window");
}

std::vector<TokenSpan> plan_windows(std::size_t n_tokens, const IngestConfig& cfg) {
  cfg.validate();
  std::vector<TokenSpan> windows;
  for (std::size_t start = 0; start < n_tokens; start += cfg.stride_tokens) {
    const std::size_t end = std::min(n_tokens, start + cfg.window_tokens);
    windows.push_back({start, end});
    if (end == n_tokens) break;
  }
  return windows;
}

std::vector<TokenSpan> plan_chunks(std::size_t n_tokens, const IngestConfig& cfg) {
  std::vector<TokenSpan> chunks;
  for (const auto& w : plan_windows(n_tokens, cfg)) {
    for (std::uint64_t s = w.start; s < w.end; s += cfg.tau) {
      chunks.push_back({s, std::min<std::uint64_t>(w.end, s + cfg.tau)});
    }
  }
  return chunks;
}

}  // namespace ermar::harness
