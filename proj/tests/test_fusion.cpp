#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ermar/errors.hpp"
#include "ermar/fusion.hpp"
#include "ermar/random.hpp"
#include "oracles.hpp"

using namespace ermar;

namespace {

AttentionInput random_input(Rng& rng, std::size_t nq, std::size_t nl, std::size_t nr, std::size_t d) {
  AttentionInput in;
  in.queries = support::random_matrix(rng, nq, d, 2.0);
  in.local_keys = support::random_matrix(rng, nl, d, 2.0);
  in.local_values = support::random_matrix(rng, nl, d);
  in.retrieved_keys = support::random_matrix(rng, nr, d, 2.0);
  in.retrieved_values = support::random_matrix(rng, nr, d);
  return in;
}

Matrix stack(const Matrix& a, const Matrix& b, std::size_t d) {
  Matrix out(0, d);
  for (std::size_t i = 0; i < a.rows(); ++i) out.append_row(a.row(i));
  for (std::size_t i = 0; i < b.rows(); ++i) out.append_row(b.row(i));
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

}  // namespace

TEST_CASE("3x4 case matches the triple-loop oracle") {
  Rng rng(1);
  const auto in = random_input(rng, 3, 2, 2, 4);
  const auto expected = oracle::attention(in.queries, stack(in.retrieved_keys, in.local_keys, 4),
                                          stack(in.retrieved_values, in.local_values, 4));
  CHECK(max_abs_diff(retrieval_attention(in), expected) < 1e-9);
}

TEST_CASE("no retrieved rows equals plain local attention") {
  Rng rng(2);
  auto in = random_input(rng, 4, 5, 0, 8);
  in.retrieved_keys = Matrix(0, 8);
  in.retrieved_values = Matrix(0, 8);
  CHECK(max_abs_diff(retrieval_attention(in), oracle::attention(in.queries, in.local_keys, in.local_values)) < 1e-12);
}

TEST_CASE("single value row is returned for every query") {
  Rng rng(3);
  auto in = random_input(rng, 5, 0, 1, 6);
  const auto out = retrieval_attention(in);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t c = 0; c < 6; ++c) CHECK(out(i, c) == in.retrieved_values(0, c));
  }
}

TEST_CASE("weights are row-stochastic and outputs stay in the value hull") {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 1 + rng.below(12);
    const auto in = random_input(rng, 1 + rng.below(6), rng.below(6), 1 + rng.below(6), d);
    const auto w = attention_weights(in);
    for (std::size_t i = 0; i < w.rows(); ++i) {
      double s = 0.0;
      for (double x : w.row(i)) s += x;
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
    const auto out = retrieval_attention(in);
    const auto values = stack(in.retrieved_values, in.local_values, d);
    for (std::size_t c = 0; c < d; ++c) {
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t j = 0; j < values.rows(); ++j) {
        lo = std::min(lo, values(j, c));
        hi = std::max(hi, values(j, c));
      }
      for (std::size_t i = 0; i < out.rows(); ++i) CHECK((out(i, c) >= lo && out(i, c) <= hi));
    }
  }
}

TEST_CASE("permuting KV rows leaves the output unchanged") {
  Rng rng(5);
  const auto in = random_input(rng, 3, 4, 3, 5);
  // Swap one retrieved row with one local row, keys and values together.
  AttentionInput swapped = in;
  for (std::size_t c = 0; c < 5; ++c) {
    std::swap(swapped.retrieved_keys(0, c), swapped.local_keys(2, c));
    std::swap(swapped.retrieved_values(0, c), swapped.local_values(2, c));
  }
  CHECK(max_abs_diff(retrieval_attention(in), retrieval_attention(swapped)) < 1e-12);
}

TEST_CASE("attention errors") {
  Rng rng(6);
  auto in = random_input(rng, 2, 0, 0, 4);
  CHECK_THROWS_AS(retrieval_attention(in), EmptyInputError);
  in = random_input(rng, 2, 2, 0, 4);
  in.local_values = support::random_matrix(rng, 2, 3);
  CHECK_THROWS_AS(retrieval_attention(in), DimensionError);
  in = random_input(rng, 2, 2, 1, 4);
  in.retrieved_values = support::random_matrix(rng, 2, 4);
  CHECK_THROWS_AS(retrieval_attention(in), DimensionError);
}

TEST_CASE("assemble_fusion_input") {
  Rng rng(7);
  const auto cfg = support::small_config();
  const LocalContext local{support::random_matrix(rng, 2, 16), support::random_matrix(rng, 3, 16),
                           support::random_matrix(rng, 3, 16)};

  SUBCASE("empty bank") {
    const MemoryBank bank(cfg);
    const auto in = assemble_fusion_input("query", local, bank);
    CHECK(in.retrieved_keys.rows() == 0);
    CHECK(in.local_keys == local.keys);
    CHECK(retrieval_attention(in).rows() == 2);
  }

  SUBCASE("pair_order is applied to retrieved rows") {
    MemoryBank bank(cfg);
    const auto keys = support::random_matrix(rng, 3, 16);
    const auto values = support::random_matrix(rng, 3, 16);
    bank.insert_chunk(0, {}, "abc", keys, values);
    RetrievalResult result;
    result.hits.push_back({0, 1.0, {2, 1, 0}});
    const auto in = assemble_fusion_input(result, local, bank);
    REQUIRE(in.retrieved_keys.rows() == 3);
    for (std::size_t r = 0; r < 3; ++r) {
      CHECK(std::equal(in.retrieved_keys.row(r).begin(), in.retrieved_keys.row(r).end(), keys.row(2 - r).begin()));
      CHECK(std::equal(in.retrieved_values.row(r).begin(), in.retrieved_values.row(r).end(), values.row(2 - r).begin()));
    }
  }

  SUBCASE("five-entry bank follows the retrieval oracle") {
    auto bank = support::random_bank(rng, 5, cfg);
    const auto query = Query::make("tok1 tok4", cfg.embedder, 3);
    const auto expected_hits = oracle::retrieve(bank, query, true, true);
    Matrix expected_keys(0, 16);
    for (const auto& h : expected_hits.hits) {
      for (std::size_t j : h.pair_order) expected_keys.append_row(bank.find(h.chunk_id)->keys.row(j));
    }
    const auto in = assemble_fusion_input("tok1 tok4", local, bank, 3);
    CHECK(in.retrieved_keys == expected_keys);
  }
}
