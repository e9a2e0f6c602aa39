#pragma once

#include <cstddef>
#include <vector>

#include "ermar/memory_bank.hpp"

namespace ermar::harness {

struct IngestConfig {
  std::size_t window_tokens = 512;
  std::size_t stride_tokens = 512;
  std::size_t tau = 128;

  /// Throws ConfigError unless all fields are positive and tau <= window.
  /// A stride longer than the window is accepted; the windows then skip tokens.
  void validate() const;
};

/// Sliding windows over a document of n_tokens. Windows start at multiples of
/// the stride below n_tokens and stop after the first window that reaches the
/// end; the last one may be short.
std::vector<TokenSpan> plan_windows(std::size_t n_tokens, const IngestConfig& cfg);

/// Each window split into consecutive groups of at most tau tokens.
std::vector<TokenSpan> plan_chunks(std::size_t n_tokens, const IngestConfig& cfg);

}  // namespace ermar::harness
