#include "ermar/harness/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ermar/embedder.hpp"
#include "ermar/errors.hpp"

namespace ermar::harness {

namespace {

bool looks_like_records(const std::string& content) {
  const auto pos = content.find_first_not_of(" \t\r\n");
  return pos != std::string::npos && content[pos] == '{';
}

}  // namespace

std::vector<std::string> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading corpus " + path.string());

  std::vector<std::string> documents;
  if (!looks_like_records(content)) {
    if (!tokenize(content).empty()) documents.push_back(std::move(content));
    return documents;
  }

  std::istringstream lines(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed record: " + e.what());
    }
    if (!record.is_object() || !record.contains("text") || !record["text"].is_string()) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": record has no string \"text\" field");
    }
    documents.push_back(record["text"].get<std::string>());
  }
  return documents;
}

std::size_t ingest_documents(const std::vector<std::string>& documents, const IngestConfig& cfg,
                             MemoryBank& bank, const SyntheticKvConfig& kv) {
  cfg.validate();
  if (cfg.tau > bank.config().tau) throw ConfigError("ingest tau exceeds the bank's group size");

  std::uint64_t next_doc = 0;
  for (const auto& e : bank.entries()) next_doc = std::max(next_doc, e.doc_id + 1);

  std::size_t inserted = 0;
  for (const auto& text : documents) {
    const auto tokens = tokenize(text);
    const std::uint64_t doc_id = next_doc++;
    for (const auto& span : plan_chunks(tokens.size(), cfg)) {
      const std::span<const std::string> chunk(tokens.data() + span.start, span.end - span.start);
      insert_synthetic_chunk(bank, doc_id, span, chunk, kv);
      ++inserted;
    }
  }
  return inserted;
}

std::size_t ingest_corpus(const std::filesystem::path& path, const IngestConfig& cfg, MemoryBank& bank,
                          const SyntheticKvConfig& kv) {
  cfg.validate();
  return ingest_documents(read_corpus(path), cfg, bank, kv);
}

}  // namespace ermar::harness
