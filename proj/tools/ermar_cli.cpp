// Command-line front end for the ranked retrieval memory.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 I/O or format error.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ermar/errors.hpp"
#include "ermar/harness/bench.hpp"
#include "ermar/harness/ingest.hpp"
#include "ermar/harness/needle.hpp"
#include "ermar/memory_bank.hpp"
#include "ermar/retrieval.hpp"
#include "ermar/snapshot.hpp"

namespace {

using ermar::harness::Json;

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;

struct BankOptions {
  std::size_t capacity = 32768;
  std::size_t tau = 128;
  std::size_t d_model = 64;
  std::size_t embed_dim = 1024;
  std::uint64_t embed_seed = 0;
  std::size_t feature_buckets = 4096;
  std::uint64_t projection_seed = 0;
  double score_floor = 0.0;

  void add_to(CLI::App& app) {
    app.add_option("--capacity", capacity, "Bank capacity in KV pairs")->capture_default_str();
    app.add_option("--bank-tau", tau, "Bank group size (max pairs per entry)")->capture_default_str();
    app.add_option("--d-model", d_model, "Key/value width")->capture_default_str();
    app.add_option("--embed-dim", embed_dim, "Retrieval embedding dimension")->capture_default_str();
    app.add_option("--embed-seed", embed_seed, "Embedder hash seed")->capture_default_str();
    app.add_option("--feature-buckets", feature_buckets, "Embedder hashing width")->capture_default_str();
    app.add_option("--projection-seed", projection_seed, "Seed of the d_ret -> d_model projection")
        ->capture_default_str();
    app.add_option("--score-floor", score_floor, "Threshold pruning floor (0 disables)")->capture_default_str();
  }

  ermar::BankConfig config() const {
    ermar::BankConfig cfg;
    cfg.capacity_pairs = capacity;
    cfg.tau = tau;
    cfg.d_model = d_model;
    cfg.embedder.dim = embed_dim;
    cfg.embedder.seed = embed_seed;
    cfg.embedder.feature_buckets = feature_buckets;
    cfg.projection_seed = projection_seed;
    cfg.score_floor = score_floor;
    return cfg;
  }
};

struct NeedleOptions {
  ermar::harness::NeedleConfig cfg;
  bool no_timing = false;

  void add_to(CLI::App& app) {
    app.add_option("--seed", cfg.seed, "Corpus and query seed")->capture_default_str();
    app.add_option("--docs", cfg.n_docs, "Total chunks including needles")->capture_default_str();
    app.add_option("--needles", cfg.n_needles, "Planted relevant chunks")->capture_default_str();
    app.add_option("-k", cfg.k, "TopK")->capture_default_str();
    app.add_option("--queries", cfg.n_queries, "Queries per run")->capture_default_str();
    app.add_option("--chunk-tokens", cfg.chunk_tokens, "Tokens per chunk")->capture_default_str();
    app.add_option("--echo-fraction", cfg.echo_fraction, "Share of distractors that echo topic tokens")
        ->capture_default_str();
    app.add_option("--embed-dim", cfg.embed_dim, "Retrieval embedding dimension")->capture_default_str();
    app.add_option("--embed-seed", cfg.embed_seed, "Embedder hash seed")->capture_default_str();
    app.add_option("--d-model", cfg.d_model, "Key/value width")->capture_default_str();
    app.add_option("--kv-seed", cfg.kv.seed, "Synthetic KV seed")->capture_default_str();
    app.add_flag("--no-timing", no_timing, "Omit timing fields (output becomes bitwise reproducible)");
  }
};

void print_reports(const std::vector<ermar::harness::EvalReport>& reports, bool no_timing) {
  for (const auto& r : reports) {
    std::cout << (no_timing ? ermar::harness::deterministic_view(r) : ermar::harness::to_json(r)).dump() << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ranked retrieval memory: ingest, retrieve, evaluate and benchmark"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Chunk a corpus into a bank file (created if missing)");
  std::filesystem::path corpus_path, bank_path, out_path;
  ermar::harness::IngestConfig ingest_cfg;
  BankOptions bank_opts;
  std::uint64_t kv_seed = 0;
  ingest->add_option("--corpus", corpus_path, "UTF-8 text or JSONL records with a \"text\" field")->required();
  ingest->add_option("--window", ingest_cfg.window_tokens, "Window length in tokens")->capture_default_str();
  ingest->add_option("--stride", ingest_cfg.stride_tokens, "Window stride in tokens")->capture_default_str();
  ingest->add_option("--tau", ingest_cfg.tau, "Tokens per chunk")->capture_default_str();
  ingest->add_option("--bank", bank_path, "Bank snapshot path")->required();
  ingest->add_option("--kv-seed", kv_seed, "Synthetic KV seed")->capture_default_str();
  bank_opts.add_to(*ingest);

  // retrieve
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Query a bank");
  std::string query_text;
  std::size_t k = 8;
  bool uniform = false, no_rerank = false, update_usage = false;
  retrieve_cmd->add_option("--bank", bank_path, "Bank snapshot path")->required();
  retrieve_cmd->add_option("--query", query_text, "Query text")->required();
  retrieve_cmd->add_option("-k", k, "TopK")->capture_default_str();
  retrieve_cmd->add_flag("--uniform", uniform, "Similarity-only baseline");
  retrieve_cmd->add_flag("--no-rerank", no_rerank, "Keep stored pair order");
  retrieve_cmd->add_flag("--update-usage", update_usage, "Record the hits as a usage event and save the bank");

  // eval-needle / ablate
  auto* needle = app.add_subcommand("eval-needle", "Synthetic needle retrieval: RSAR vs uniform");
  NeedleOptions needle_opts;
  needle_opts.add_to(*needle);
  auto* ablate = app.add_subcommand("ablate", "Scoring x rerank ablation on the needle suite");
  NeedleOptions ablate_opts;
  ablate_opts.add_to(*ablate);

  // bench
  auto* bench = app.add_subcommand("bench", "Latency, throughput and bytes per token");
  ermar::harness::BenchConfig bench_cfg;
  BankOptions bench_bank;
  std::filesystem::path bench_bank_path;
  bench->add_option("--bank", bench_bank_path, "Take configuration from this bank and also time queries on it");
  bench->add_option("--queries", bench_cfg.queries, "Distinct queries per context length")->capture_default_str();
  bench->add_option("--context-lengths", bench_cfg.context_lengths, "Comma separated token counts")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--warmup", bench_cfg.warmup, "Untimed warm-up retrievals")->capture_default_str();
  bench->add_option("--seed", bench_cfg.seed, "Workload seed")->capture_default_str();
  bench->add_option("-k", bench_cfg.k, "TopK")->capture_default_str();
  bench_bank.add_to(*bench);

  // snapshot
  auto* snapshot = app.add_subcommand("snapshot", "Validate a bank file and write a fresh copy");
  snapshot->add_option("--bank", bank_path, "Bank snapshot path")->required();
  snapshot->add_option("--out", out_path, "Output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (ingest->parsed()) {
      ingest_cfg.validate();
      const bool exists = std::filesystem::exists(bank_path);
      ermar::MemoryBank bank = exists ? ermar::load_bank(bank_path) : ermar::MemoryBank(bank_opts.config());
      const std::size_t chunks = ermar::harness::ingest_corpus(corpus_path, ingest_cfg, bank, {kv_seed});
      ermar::save_bank(bank, bank_path);
      std::cout << Json{{"chunks", chunks},
                        {"entries", bank.size()},
                        {"total_pairs", bank.total_pairs()},
                        {"created", !exists}}
                       .dump()
                << '\n';
    } else if (retrieve_cmd->parsed()) {
      ermar::MemoryBank bank = ermar::load_bank(bank_path);
      const auto query = ermar::Query::make(query_text, bank.config().embedder, k);
      const auto result = uniform ? ermar::retrieve_uniform(bank, query)
                                  : ermar::retrieve(bank, query, ermar::RetrieveOptions{!no_rerank});
      for (std::size_t rank = 0; rank < result.hits.size(); ++rank) {
        const auto& hit = result.hits[rank];
        const auto* entry = bank.find(hit.chunk_id);
        std::cout << Json{{"rank", rank},
                          {"chunk_id", hit.chunk_id},
                          {"doc_id", entry->doc_id},
                          {"span", {entry->span.start, entry->span.end}},
                          {"score", hit.score},
                          {"pair_order", hit.pair_order}}
                         .dump()
                  << '\n';
      }
      if (update_usage) {
        const auto ids = result.hit_ids();
        bank.update_usage(ids);
        ermar::save_bank(bank, bank_path);
      }
    } else if (needle->parsed()) {
      const auto [rsar, base] = ermar::harness::run_needle_eval(needle_opts.cfg);
      print_reports({rsar, base}, needle_opts.no_timing);
    } else if (ablate->parsed()) {
      print_reports(ermar::harness::run_ablation(ablate_opts.cfg), ablate_opts.no_timing);
    } else if (bench->parsed()) {
      if (!bench_bank_path.empty()) {
        const ermar::MemoryBank bank = ermar::load_bank(bench_bank_path);
        bench_cfg.bank = bank.config();
        print_reports({ermar::harness::bench_existing_bank(bank, bench_cfg)}, false);
      } else {
        bench_cfg.bank = bench_bank.config();
      }
      print_reports(ermar::harness::run_benchmark(bench_cfg), false);
    } else if (snapshot->parsed()) {
      const ermar::MemoryBank bank = ermar::load_bank(bank_path);
      ermar::save_bank(bank, out_path);
      std::cout << Json{{"entries", bank.size()},
                        {"total_pairs", bank.total_pairs()},
                        {"clock", bank.clock()},
                        {"bytes", ermar::snapshot_size(bank)}}
                       .dump()
                << '\n';
    }
  } catch (const ermar::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ermar::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
