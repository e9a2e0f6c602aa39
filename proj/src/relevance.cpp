#include "ermar/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ermar/errors.hpp"

namespace ermar {

RelevanceScores::RelevanceScores(std::vector<double> weights) : weights_(std::move(weights)) {
  double sum = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0 || w > 1.0) {
      throw NumericError("relevance weight outside [0, 1]");
    }
    sum += w;
  }
  if (!weights_.empty() && std::abs(sum - 1.0) > 1e-9) {
    throw NumericError("relevance weights do not sum to 1");
  }
}

double RelevanceScores::max() const {
  if (weights_.empty()) throw EmptyInputError("max of empty relevance scores");
  return *std::max_element(weights_.begin(), weights_.end());
}

std::vector<double> stable_softmax(std::span<const double> logits) {
  if (logits.empty()) throw EmptyInputError("softmax over zero logits");
  double peak = logits[0];
  for (double x : logits) {
    if (!std::isfinite(x)) throw NumericError("non-finite logit");
    peak = std::max(peak, x);
  }
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  // total >= 1 because the peak contributes exp(0).
  for (double& w : out) w /= total;
  return out;
}

RelevanceScores relevance_scores(std::span<const double> query, const Matrix& keys) {
  if (keys.rows() == 0) throw EmptyInputError("relevance_scores: no keys");
  if (query.empty()) throw DimensionError("relevance_scores: empty query");
  if (keys.cols() != query.size()) throw DimensionError("relevance_scores: query/key width mismatch");
  for (double x : query) {
    if (!std::isfinite(x)) throw NumericError("relevance_scores: non-finite query");
  }
  for (double x : keys.data()) {
    if (!std::isfinite(x)) throw NumericError("relevance_scores: non-finite key");
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(query.size()));
  std::vector<double> logits(keys.rows());
  for (std::size_t i = 0; i < keys.rows(); ++i) logits[i] = dot(query, keys.row(i)) * scale;
  return RelevanceScores(stable_softmax(logits));
}

std::vector<std::size_t> rank_descending(const RelevanceScores& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto w = scores.weights();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
  return order;
}

double combined_score(double sim, const RelevanceScores& entry_scores) {
  return sim * entry_scores.max();
}

}  // namespace ermar
