#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ermar/errors.hpp"
#include "ermar/harness/bench.hpp"
#include "ermar/harness/chunking.hpp"
#include "ermar/harness/ingest.hpp"
#include "ermar/harness/needle.hpp"
#include "ermar/harness/report.hpp"
#include "ermar/snapshot.hpp"
#include "oracles.hpp"

using namespace ermar;
using namespace ermar::harness;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("ermar_test_" + name);
  std::ofstream(path, std::ios::binary) << content;
  return path;
}

std::string words(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += "w" + std::to_string(i % 97) + (i + 1 < n ? " " : "");
  return s;
}

BankConfig ingest_bank() {
  auto cfg = support::small_config(1 << 20, 128);
  return cfg;
}

NeedleConfig small_needle() {
  NeedleConfig cfg;
  cfg.n_docs = 60;
  cfg.n_needles = 5;
  return cfg;
}

}  // namespace

TEST_CASE("window and chunk planning fixtures") {
  CHECK(plan_chunks(256, {256, 512, 128}).size() == 2);
  CHECK(plan_chunks(1024, {512, 512, 128}).size() == 8);
  CHECK(plan_chunks(0, {512, 512, 128}).empty());
  const auto windows = plan_windows(1024, {512, 512, 128});
  REQUIRE(windows.size() == 2);
  CHECK(windows[1] == TokenSpan{512, 1024});
  // Overlapping windows stop once the end is reached.
  const auto overlap = plan_windows(600, {512, 256, 128});
  REQUIRE(overlap.size() == 2);
  CHECK(overlap[1] == TokenSpan{256, 600});
}

TEST_CASE("chunk accounting matches the closed form") {
  for (std::size_t n : {1u, 5u, 127u, 128u, 129u, 511u, 512u, 513u, 1000u, 4097u}) {
    for (const IngestConfig cfg : {IngestConfig{512, 512, 128}, IngestConfig{512, 256, 128}, IngestConfig{300, 100, 64},
                                   IngestConfig{128, 128, 128}, IngestConfig{200, 7, 30}, IngestConfig{256, 512, 128},
                                   IngestConfig{100, 350, 32}}) {
      CHECK(plan_chunks(n, cfg).size() == oracle::chunk_count(n, cfg.window_tokens, cfg.stride_tokens, cfg.tau));
    }
  }
}

TEST_CASE("ingest config validation") {
  CHECK_NOTHROW((IngestConfig{128, 256, 64}.validate()));
  CHECK_THROWS_AS((IngestConfig{128, 64, 256}.validate()), ConfigError);
  CHECK_THROWS_AS((IngestConfig{0, 0, 0}.validate()), ConfigError);
}

TEST_CASE("read_corpus handles text and records") {
  const auto text = write_temp("plain.txt", "one two three\nfour five\n");
  CHECK(read_corpus(text).size() == 1);
  const auto records = write_temp("records.jsonl", "{\"text\": \"a b c\"}\n\n{\"text\": \"d e\", \"id\": 4}\n");
  CHECK(read_corpus(records) == std::vector<std::string>{"a b c", "d e"});
  const auto bad = write_temp("bad.jsonl", "{\"text\": \"a\"}\n{\"body\": 1}\n");
  CHECK_THROWS_AS(read_corpus(bad), IoError);
  const auto empty = write_temp("empty.txt", "");
  CHECK(read_corpus(empty).empty());
  CHECK_THROWS_AS(read_corpus("/nonexistent/corpus.txt"), IoError);
}

TEST_CASE("ingest_corpus inserts the planned chunks") {
  SUBCASE("256-token doc, window 256") {
    MemoryBank bank(ingest_bank());
    CHECK(ingest_corpus(write_temp("d256.txt", words(256)), {256, 512, 128}, bank) == 2);
  }
  SUBCASE("1024-token doc, window 512, stride 512") {
    MemoryBank bank(ingest_bank());
    CHECK(ingest_corpus(write_temp("d1024.txt", words(1024)), {512, 512, 128}, bank) == 8);
    CHECK(bank.size() == 8);
    CHECK(bank.total_pairs() == 1024);
    CHECK(bank.entries()[5].span == TokenSpan{640, 768});
  }
  SUBCASE("empty file") {
    MemoryBank bank(ingest_bank());
    CHECK(ingest_corpus(write_temp("none.txt", ""), {512, 512, 128}, bank) == 0);
  }
  SUBCASE("records become separate documents") {
    MemoryBank bank(ingest_bank());
    const auto path = write_temp("docs.jsonl", "{\"text\": \"" + words(200) + "\"}\n{\"text\": \"" + words(10) + "\"}\n");
    CHECK(ingest_corpus(path, {128, 128, 128}, bank) == 3);
    CHECK(bank.entries().back().doc_id == 1);
  }
  SUBCASE("chunk text embeds like the joined tokens") {
    MemoryBank bank(ingest_bank());
    ingest_corpus(write_temp("emb.txt", "Alpha  beta\tGAMMA"), {128, 128, 128}, bank);
    CHECK(bank.entries()[0].embedding == embed_text("alpha beta gamma", bank.config().embedder));
  }
  SUBCASE("tau larger than the bank's group size") {
    auto cfg = ingest_bank();
    cfg.tau = 64;
    MemoryBank bank(cfg);
    CHECK_THROWS_AS(ingest_corpus(write_temp("x.txt", words(10)), {128, 128, 128}, bank), ConfigError);
  }
}

TEST_CASE("synthetic KVs carry the semantic key") {
  MemoryBank bank(ingest_bank());
  const std::vector<std::string> tokens{"a", "b", "c", "d"};
  const auto e = embed_tokens(tokens, bank.config().embedder);
  const SyntheticKvConfig cfg{5, 10.0};
  const auto kv = synthesize_kv(bank, e, tokens, 3, cfg);
  const auto p = bank.project(e);
  for (std::size_t c = 0; c < p.size(); ++c) CHECK(kv.keys(kv.semantic_row, c) == 10.0 * p[c]);
  // Same stream index, same matrices.
  const auto again = synthesize_kv(bank, e, tokens, 3, cfg);
  CHECK(again.keys == kv.keys);
  CHECK(again.values == kv.values);
  CHECK(distinct_ratio(std::vector<std::string>{"x", "x", "y", "x"}) == 0.5);
}

TEST_CASE("needle eval examples") {
  SUBCASE("every chunk relevant") {
    auto cfg = small_needle();
    cfg.n_needles = cfg.n_docs;
    const auto [rsar, uniform] = run_needle_eval(cfg);
    CHECK(*rsar.precision_at_k == 1.0);
    CHECK(*uniform.precision_at_k == 1.0);
  }
  SUBCASE("single needle with a unique token, k=1") {
    auto cfg = small_needle();
    cfg.n_needles = 1;
    cfg.k = 1;
    cfg.echo_fraction = 0.0;
    const auto bench = build_needle_bench(cfg);
    // Scoring oracle: the needle's combined score is the strict maximum for every query.
    for (const auto& q : bench.queries) {
      double needle_score = -1.0, best_other = -1.0;
      for (const auto& e : bench.bank.entries()) {
        const double s = oracle::cosine(q.embedding, e.embedding) * oracle::max_of(e.pair_scores.weights());
        (bench.relevant[e.chunk_id] ? needle_score : best_other) = bench.relevant[e.chunk_id] ? s : std::max(best_other, s);
      }
      CHECK(needle_score > best_other);
    }
    const auto [rsar, uniform] = run_needle_eval(cfg);
    CHECK(*rsar.recall_at_k == 1.0);
  }
  SUBCASE("fixed seed is reproducible") {
    auto cfg = small_needle();
    cfg.seed = 7;
    const auto a = run_needle_eval(cfg);
    const auto b = run_needle_eval(cfg);
    CHECK(deterministic_view(a.first) == deterministic_view(b.first));
    CHECK(deterministic_view(a.second) == deterministic_view(b.second));
  }
  SUBCASE("invalid sizes") {
    auto cfg = small_needle();
    cfg.n_needles = cfg.n_docs + 1;
    CHECK_THROWS_AS(run_needle_eval(cfg), ConfigError);
    cfg = small_needle();
    cfg.k = 0;
    CHECK_THROWS_AS(run_needle_eval(cfg), ConfigError);
  }
}

TEST_CASE("ablation wiring") {
  auto cfg = small_needle();
  cfg.seed = 7;
  const auto bench = build_needle_bench(cfg);
  for (const auto& q : bench.queries) {
    CHECK(retrieve_mode(bench.bank, q, {false, false}) == retrieve_uniform(bench.bank, q));
    CHECK(retrieve_mode(bench.bank, q, {true, true}) == retrieve(bench.bank, q));
    for (bool scoring : {true, false}) {
      const auto on = retrieve_mode(bench.bank, q, {scoring, true});
      const auto off = retrieve_mode(bench.bank, q, {scoring, false});
      CHECK(on.hit_ids() == off.hit_ids());
    }
  }

  // Per-mode numbers recomputed from the retrieval oracle.
  const auto reports = run_ablation(cfg);
  REQUIRE(reports.size() == 4);
  const AblationMode modes[] = {{true, true}, {true, false}, {false, true}, {false, false}};
  for (std::size_t m = 0; m < 4; ++m) {
    double precision = 0.0, recall = 0.0, mrr = 0.0;
    for (const auto& q : bench.queries) {
      const auto r = oracle::retrieve(bench.bank, q, modes[m].scoring, modes[m].rerank);
      const auto quality = score_result(bench, r);
      precision += quality.precision_at_k;
      recall += quality.recall_at_k;
      mrr += quality.semantic_pair_mrr;
    }
    const double n = static_cast<double>(bench.queries.size());
    CHECK(reports[m].label == modes[m].label());
    CHECK(*reports[m].precision_at_k == precision / n);
    CHECK(*reports[m].recall_at_k == recall / n);
    CHECK(*reports[m].semantic_pair_mrr == mrr / n);
  }
}

TEST_CASE("latency summary") {
  CHECK_FALSE(summarize_latency({}).has_value());
  const auto s = summarize_latency({4.0, 1.0, 3.0, 2.0, 5.0});
  REQUIRE(s.has_value());
  CHECK(s->p50 == 3.0);
  CHECK(s->p95 == doctest::Approx(4.8));
  CHECK(s->mean == 3.0);
  CHECK(s->stddev == doctest::Approx(std::sqrt(2.5)));
  CHECK(s->samples == 5);
}

TEST_CASE("report serialization") {
  EvalReport r;
  r.label = "x";
  r.precision_at_k = 0.5;
  const auto j = to_json(r);
  CHECK(j["latency_ms"].is_null());
  CHECK(j["recall_at_k"].is_null());
  CHECK(j["timing_fields"] == Json::array({"latency_ms", "throughput_tokens_per_sec"}));
  const auto keys = [&] {
    std::vector<std::string> out;
    for (const auto& [k, v] : j.items()) out.push_back(k);
    return out;
  }();
  CHECK(keys == std::vector<std::string>{"label", "precision_at_k", "recall_at_k", "semantic_pair_mrr", "latency_ms",
                                         "throughput_tokens_per_sec", "bytes_per_token", "config", "timing_fields"});
  CHECK_FALSE(deterministic_view(r).contains("latency_ms"));
}

TEST_CASE("benchmark bytes per token follows the snapshot size formula") {
  BenchConfig cfg;
  cfg.bank = support::small_config(1 << 16, 32);
  cfg.context_lengths = {64, 128, 256, 1024};
  cfg.queries = 0;
  const auto reports = run_benchmark(cfg);
  REQUIRE(reports.size() == 4);
  double prev = INFINITY;
  for (const auto& r : reports) {
    CHECK(r.latency_ms == std::nullopt);
    CHECK(to_json(r)["latency_ms"].is_null());
    const auto tokens = r.config["context_tokens"].get<std::size_t>();
    const std::size_t entries = tokens / 32;
    // header + trailer + per entry (fixed fields, embedding, keys, values, scores, usage)
    const double bytes = 104.0 + 8.0 + static_cast<double>(entries) * (48.0 + 8.0 * (64 + 2 * 32 * 16 + 32 + 1));
    CHECK(*r.bytes_per_token == doctest::Approx(bytes / static_cast<double>(tokens)).epsilon(1e-15));
    CHECK(*r.bytes_per_token < prev);
    prev = *r.bytes_per_token;
  }
}

TEST_CASE("benchmark collects at least min_samples latencies") {
  BenchConfig cfg;
  cfg.bank = support::small_config(1 << 16, 32);
  cfg.context_lengths = {256};
  cfg.queries = 5;
  const auto reports = run_benchmark(cfg);
  REQUIRE(reports[0].latency_ms.has_value());
  CHECK(reports[0].latency_ms->samples == 30);
  CHECK(reports[0].latency_ms->p50 >= 0.0);
}
