#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ermar/harness/chunking.hpp"
#include "ermar/harness/synthetic_kv.hpp"
#include "ermar/memory_bank.hpp"

namespace ermar::harness {

/// Reads a corpus file. Line-delimited JSON records (first non-blank character
/// '{') yield one document per record's "text" field; anything else is one
/// plain-text document. Throws IoError / ConfigError.
std::vector<std::string> read_corpus(const std::filesystem::path& path);

/// Windows, chunks and inserts each document; returns the number of chunks inserted.
std::size_t ingest_documents(const std::vector<std::string>& documents, const IngestConfig& cfg,
                             MemoryBank& bank, const SyntheticKvConfig& kv = {});

std::size_t ingest_corpus(const std::filesystem::path& path, const IngestConfig& cfg, MemoryBank& bank,
                          const SyntheticKvConfig& kv = {});

}  // namespace ermar::harness
