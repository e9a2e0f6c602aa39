#include "ermar/snapshot.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ermar/errors.hpp"

namespace ermar {

namespace {

constexpr std::array<char, 4> kMagic = {'R', 'S', 'A', 'R'};
constexpr std::size_t kEntryFixedBytes = 6 * 8;

constexpr std::array<std::uint64_t, 256> make_crc_table() {
  constexpr std::uint64_t poly = 0xC96C5795D7870F42ULL;  // reflected ECMA-182
  std::array<std::uint64_t, 256> table{};
  for (std::uint64_t i = 0; i < 256; ++i) {
    std::uint64_t crc = i;
    for (int k = 0; k < 8; ++k) crc = (crc & 1) ? (crc >> 1) ^ poly : crc >> 1;
    table[i] = crc;
  }
  return table;
}

constexpr auto kCrcTable = make_crc_table();

class Writer {
 public:
  explicit Writer(std::size_t reserve) { out_.reserve(reserve); }

  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(std::span<const double> vs) {
    for (double v : vs) f64(v);
  }

  std::vector<std::uint8_t> finish() && {
    u64(crc64(out_));
    return std::move(out_);
  }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return in_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw FormatError(std::string("truncated snapshot reading ") + what, pos_);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::vector<double> f64s(std::size_t n, const char* what) {
    if (n > remaining() / 8) throw FormatError(std::string("truncated snapshot reading ") + what, pos_);
    std::vector<double> out(n);
    for (auto& v : out) v = f64(what);
    return out;
  }
  std::size_t size(const char* what, std::size_t limit) {
    const std::uint64_t v = u64(what);
    if (v > limit) throw FormatError(std::string("implausible ") + what, pos_ - 8);
    return static_cast<std::size_t>(v);
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::size_t entry_bytes(std::size_t d_ret, std::size_t d_model, std::size_t n) {
  return kEntryFixedBytes + 8 * (d_ret + 2 * n * d_model + n + 1);
}

}  // namespace

std::uint64_t crc64(std::span<const std::uint8_t> bytes) {
  std::uint64_t crc = ~0ULL;
  for (std::uint8_t b : bytes) crc = kCrcTable[(crc ^ b) & 0xFF] ^ (crc >> 8);
  return ~crc;
}

std::size_t snapshot_size(const MemoryBank& bank) {
  const auto& cfg = bank.config();
  std::size_t total = kSnapshotHeaderBytes + kSnapshotTrailerBytes;
  for (const auto& e : bank.entries()) total += entry_bytes(cfg.d_ret(), cfg.d_model, e.pairs());
  return total;
}

std::vector<std::uint8_t> encode_bank(const MemoryBank& bank) {
  const auto& cfg = bank.config();
  Writer w(snapshot_size(bank));
  w.bytes(kMagic.data(), kMagic.size());
  w.u32(kSnapshotVersion);
  w.u64(cfg.d_ret());
  w.u64(cfg.d_model);
  w.u64(cfg.tau);
  w.u64(cfg.capacity_pairs);
  w.u64(cfg.projection_seed);
  w.u64(cfg.embedder.seed);
  w.u64(cfg.embedder.feature_buckets);
  w.f64(cfg.usage_decay);
  w.f64(cfg.usage_boost);
  w.f64(cfg.score_floor);
  w.u64(bank.clock());
  w.u64(bank.size());
  for (const auto& e : bank.entries()) {
    w.u64(e.chunk_id);
    w.u64(e.doc_id);
    w.u64(e.span.start);
    w.u64(e.span.end);
    w.u64(e.inserted_at);
    w.u64(e.pairs());
    w.f64s(e.embedding.values());
    w.f64s(e.keys.data());
    w.f64s(e.values.data());
    w.f64s(e.pair_scores.weights());
    w.f64(e.usage);
  }
  return std::move(w).finish();
}

MemoryBank decode_bank(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(kMagic.size(), "magic");
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) throw FormatError("bad snapshot magic", 0);
  r.u32("magic");
  const std::uint32_t version = r.u32("version");
  if (version != kSnapshotVersion) {
    throw FormatError("unsupported snapshot version " + std::to_string(version), r.offset() - 4);
  }
  if (bytes.size() < kSnapshotHeaderBytes + kSnapshotTrailerBytes) {
    throw FormatError("truncated snapshot", bytes.size());
  }

  // The checksum covers everything ahead of the trailer; verify before trusting any field.
  const std::size_t body = bytes.size() - kSnapshotTrailerBytes;
  Reader trailer(bytes.subspan(body));
  const std::uint64_t stored_crc = trailer.u64("checksum");
  if (crc64(bytes.first(body)) != stored_crc) throw FormatError("snapshot checksum mismatch", body);
  Reader in(bytes.first(body));
  in.u32("magic");
  in.u32("version");

  constexpr std::size_t kMaxDim = std::size_t{1} << 24;
  BankConfig cfg;
  cfg.embedder.dim = in.size("d_ret", kMaxDim);
  cfg.d_model = in.size("d_model", kMaxDim);
  cfg.tau = in.size("tau", kMaxDim);
  cfg.capacity_pairs = in.size("capacity_pairs", std::size_t{1} << 40);
  cfg.projection_seed = in.u64("projection_seed");
  cfg.embedder.seed = in.u64("embed_seed");
  cfg.embedder.feature_buckets = in.size("feature_buckets", std::size_t{1} << 40);
  cfg.usage_decay = in.f64("usage_decay");
  cfg.usage_boost = in.f64("usage_boost");
  cfg.score_floor = in.f64("score_floor");
  const std::uint64_t clock = in.u64("clock");
  const std::size_t count = in.size("entry_count", bytes.size());
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid snapshot header: ") + e.what(), kSnapshotHeaderBytes);
  }

  std::vector<MemoryEntry> entries;
  entries.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t start = in.offset();
    MemoryEntry e;
    e.chunk_id = in.u64("chunk_id");
    e.doc_id = in.u64("doc_id");
    e.span.start = in.u64("span_start");
    e.span.end = in.u64("span_end");
    e.inserted_at = in.u64("inserted_at");
    const std::size_t n = in.size("n_pairs", cfg.tau);
    try {
      e.embedding = Embedding::from_unit(in.f64s(cfg.d_ret(), "embedding"));
      e.keys = Matrix(n, cfg.d_model, in.f64s(n * cfg.d_model, "keys"));
      e.values = Matrix(n, cfg.d_model, in.f64s(n * cfg.d_model, "values"));
      e.pair_scores = RelevanceScores(in.f64s(n, "pair_scores"));
    } catch (const FormatError&) {
      throw;
    } catch (const Error& err) {
      throw FormatError(std::string("invalid entry: ") + err.what(), start);
    }
    e.usage = in.f64("usage");
    entries.push_back(std::move(e));
  }
  if (in.remaining() != 0) throw FormatError("trailing bytes after last entry", in.offset());

  try {
    return MemoryBank::restore(cfg, clock, std::move(entries));
  } catch (const FormatError&) {
    throw;
  } catch (const Error& err) {
    throw FormatError(std::string("inconsistent snapshot: ") + err.what(), kSnapshotHeaderBytes);
  }
}

void save_bank(const MemoryBank& bank, const std::filesystem::path& path) {
  const auto bytes = encode_bank(bank);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

MemoryBank load_bank(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path.string());
  return decode_bank(bytes);
}

}  // namespace ermar
