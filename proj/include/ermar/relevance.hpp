#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ermar/matrix.hpp"

namespace ermar {

/// Probability distribution over scored keys.
///
/// Weights lie in [0, 1] and sum to 1 within 1e-9. A weight can underflow to
/// exactly zero when its logit trails the maximum by more than ~745.
class RelevanceScores {
 public:
  RelevanceScores() = default;

  /// Validates and adopts `weights`; throws NumericError if they are not a distribution.
  explicit RelevanceScores(std::vector<double> weights);

  std::size_t size() const noexcept { return weights_.size(); }
  bool empty() const noexcept { return weights_.empty(); }
  std::span<const double> weights() const noexcept { return weights_; }
  double operator[](std::size_t i) const { return weights_[i]; }
  double max() const;

  bool operator==(const RelevanceScores&) const = default;

 private:
  std::vector<double> weights_;
};

/// Max-subtracted softmax. Throws EmptyInputError / NumericError.
std::vector<double> stable_softmax(std::span<const double> logits);

/// softmax(q K^T / sqrt(d)), d = q.size() = keys.cols().
RelevanceScores relevance_scores(std::span<const double> query, const Matrix& keys);

/// Indices by non-increasing weight, ties to the lower index.
std::vector<std::size_t> rank_descending(const RelevanceScores& scores);

/// sim * max_j s_j.
double combined_score(double sim, const RelevanceScores& entry_scores);

}  // namespace ermar
