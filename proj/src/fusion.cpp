#include "ermar/fusion.hpp"

#include <string>

#include "ermar/errors.hpp"
#include "ermar/relevance.hpp"

namespace ermar {

namespace {

void check_input(const AttentionInput& in) {
  if (in.queries.rows() == 0) throw EmptyInputError("attention needs at least one query row");
  const std::size_t d = in.queries.cols();
  if (d == 0) throw DimensionError("attention width must be positive");
  auto check = [d](const Matrix& m, const char* name) {
    if (m.rows() > 0 && m.cols() != d) throw DimensionError(std::string(name) + " width differs from queries");
  };
  check(in.local_keys, "local_keys");
  check(in.local_values, "local_values");
  check(in.retrieved_keys, "retrieved_keys");
  check(in.retrieved_values, "retrieved_values");
  if (in.local_keys.rows() != in.local_values.rows()) throw DimensionError("local keys/values row mismatch");
  if (in.retrieved_keys.rows() != in.retrieved_values.rows()) {
    throw DimensionError("retrieved keys/values row mismatch");
  }
  if (in.context_rows() == 0) throw EmptyInputError("attention over an empty context");
}

Matrix concat_rows(const Matrix& top, const Matrix& bottom, std::size_t cols) {
  Matrix out(0, cols);
  for (std::size_t i = 0; i < top.rows(); ++i) out.append_row(top.row(i));
  for (std::size_t i = 0; i < bottom.rows(); ++i) out.append_row(bottom.row(i));
  return out;
}

}  // namespace

Matrix attention_weights(const AttentionInput& input) {
  check_input(input);
  const std::size_t d = input.queries.cols();
  const Matrix keys = concat_rows(input.retrieved_keys, input.local_keys, d);
  Matrix weights(input.queries.rows(), keys.rows());
  for (std::size_t i = 0; i < input.queries.rows(); ++i) {
    const auto scores = relevance_scores(input.queries.row(i), keys);
    auto row = weights.row(i);
    for (std::size_t j = 0; j < keys.rows(); ++j) row[j] = scores[j];
  }
  return weights;
}

Matrix retrieval_attention(const AttentionInput& input) {
  const Matrix weights = attention_weights(input);
  const std::size_t d = input.queries.cols();
  const Matrix values = concat_rows(input.retrieved_values, input.local_values, d);
  Matrix out(input.queries.rows(), d);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t j = 0; j < values.rows(); ++j) {
      const double w = weights(i, j);
      const auto v = values.row(j);
      for (std::size_t c = 0; c < d; ++c) dst[c] += w * v[c];
    }
  }
  return out;
}

AttentionInput assemble_fusion_input(const RetrievalResult& result, LocalContext local,
                                     const MemoryBank& bank) {
  const std::size_t d = bank.config().d_model;
  AttentionInput in;
  in.queries = std::move(local.queries);
  in.local_keys = std::move(local.keys);
  in.local_values = std::move(local.values);
  in.retrieved_keys = Matrix(0, d);
  in.retrieved_values = Matrix(0, d);
  for (const auto& hit : result.hits) {
    const MemoryEntry* entry = bank.find(hit.chunk_id);
    if (entry == nullptr) throw Error("retrieval hit " + std::to_string(hit.chunk_id) + " is not in the bank");
    for (std::size_t j : hit.pair_order) {
      in.retrieved_keys.append_row(entry->keys.row(j));
      in.retrieved_values.append_row(entry->values.row(j));
    }
  }
  return in;
}

AttentionInput assemble_fusion_input(std::string_view query_text, LocalContext local,
                                     const MemoryBank& bank, std::size_t k) {
  const auto query = Query::make(std::string(query_text), bank.config().embedder, k);
  return assemble_fusion_input(retrieve(bank, query), std::move(local), bank);
}

}  // namespace ermar
