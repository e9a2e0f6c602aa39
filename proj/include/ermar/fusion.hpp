#pragma once

#include <cstddef>
#include <string_view>

#include "ermar/matrix.hpp"
#include "ermar/memory_bank.hpp"
#include "ermar/retrieval.hpp"

namespace ermar {

// Single-head attention input. Retrieved rows come first, in hit order with
// each hit's pairs in pair_order; no gate and no positions on retrieved rows.
struct AttentionInput {
  Matrix queries;           // n_q x d_model
  Matrix local_keys;        // n_l x d_model
  Matrix local_values;      // n_l x d_model
  Matrix retrieved_keys;    // n_r x d_model
  Matrix retrieved_values;  // n_r x d_model

  std::size_t context_rows() const noexcept { return retrieved_keys.rows() + local_keys.rows(); }
};

// Current-context activations supplied by the caller.
struct LocalContext {
  Matrix queries;
  Matrix keys;
  Matrix values;
};

/// Attention weights over [retrieved ; local] keys, one row per query.
Matrix attention_weights(const AttentionInput& input);

/// Row i = sum_j weight_ij * value_j. Throws DimensionError on width mismatch
/// and EmptyInputError when there are no context rows.
Matrix retrieval_attention(const AttentionInput& input);

/// Runs retrieve() for `query_text` and lays the retrieved KV rows out for attention.
AttentionInput assemble_fusion_input(std::string_view query_text, LocalContext local,
                                     const MemoryBank& bank, std::size_t k = 8);

/// Lays out the KV rows of an existing retrieval result.
AttentionInput assemble_fusion_input(const RetrievalResult& result, LocalContext local,
                                     const MemoryBank& bank);

}  // namespace ermar
