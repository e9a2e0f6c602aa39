#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ermar {

/// Unit-norm vector in retrieval space.
///
/// Constructed either by the embedder or by normalizing caller-supplied values;
/// every instance is finite with |norm - 1| < 1e-6.
class Embedding {
 public:
  Embedding() = default;

  /// Normalizes `values` to unit length. Throws NumericError on non-finite or
  /// all-zero input and DimensionError on an empty vector.
  static Embedding normalized(std::vector<double> values);

  /// Adopts already-normalized values (snapshot decoding). Validates the norm.
  static Embedding from_unit(std::vector<double> values);

  /// The i-th standard basis vector of length dim.
  static Embedding basis(std::size_t dim, std::size_t i);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const Embedding&) const = default;

 private:
  explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

struct EmbedderConfig {
  std::size_t dim = 1024;
  std::uint64_t seed = 0;
  std::size_t feature_buckets = 4096;

  /// Throws ConfigError unless dim >= 2 and feature_buckets >= dim.
  void validate() const;

  bool operator==(const EmbedderConfig&) const = default;
};

/// Lowercases ASCII letters and splits on Unicode whitespace.
std::vector<std::string> tokenize(std::string_view text);

/// Feature-hashing embedder: seeded FNV-1a bucket per token, counts projected
/// to `dim` through a counter-mode random-sign matrix, then L2-normalized.
/// Text without tokens maps to basis vector e_0.
Embedding embed_text(std::string_view text, const EmbedderConfig& cfg);
Embedding embed_tokens(std::span<const std::string> tokens, const EmbedderConfig& cfg);

/// Dot product of two unit vectors clamped to [-1, 1].
double cosine_similarity(const Embedding& a, const Embedding& b);

/// Interface for swapping in a different text encoder.
class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual Embedding embed(std::string_view text) const = 0;
  virtual std::size_t dim() const = 0;
};

class HashingEmbedder final : public TextEmbedder {
 public:
  explicit HashingEmbedder(EmbedderConfig cfg);
  Embedding embed(std::string_view text) const override { return embed_text(text, cfg_); }
  std::size_t dim() const override { return cfg_.dim; }
  const EmbedderConfig& config() const noexcept { return cfg_; }

 private:
  EmbedderConfig cfg_;
};

}  // namespace ermar
