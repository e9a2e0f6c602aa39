#include "ermar/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ermar/errors.hpp"
#include "ermar/random.hpp"

namespace ermar {

namespace {

// Code points with the Unicode White_Space property.
bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// Decodes one UTF-8 sequence starting at text[i]; returns its length in bytes.
// Malformed bytes decode as a single non-space unit so they stay inside tokens.
std::size_t decode_utf8(std::string_view text, std::size_t i, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  std::size_t len = 1;
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  }
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    cp = 0xFFFD;
    return 1;
  }
  if (i + len > text.size()) {
    cp = 0xFFFD;
    return 1;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(text[i + k]);
    if ((b & 0xC0) != 0x80) {
      cp = 0xFFFD;
      return 1;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  return len;
}

double squared_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

}  // namespace

Embedding Embedding::normalized(std::vector<double> values) {
  if (values.empty()) throw DimensionError("embedding must have at least one component");
  for (double x : values) {
    if (!std::isfinite(x)) throw NumericError("embedding component is not finite");
  }
  const double norm = std::sqrt(squared_norm(values));
  if (norm == 0.0) throw NumericError("cannot normalize a zero vector");
  for (double& x : values) x /= norm;
  return Embedding(std::move(values));
}

Embedding Embedding::from_unit(std::vector<double> values) {
  if (values.empty()) throw DimensionError("embedding must have at least one component");
  for (double x : values) {
    if (!std::isfinite(x)) throw NumericError("embedding component is not finite");
  }
  if (std::abs(std::sqrt(squared_norm(values)) - 1.0) >= 1e-6) {
    throw NumericError("embedding is not unit norm");
  }
  return Embedding(std::move(values));
}

Embedding Embedding::basis(std::size_t dim, std::size_t i) {
  if (i >= dim) throw DimensionError("basis index out of range");
  std::vector<double> values(dim, 0.0);
  values[i] = 1.0;
  return Embedding(std::move(values));
}

void EmbedderConfig::validate() const {
  if (dim < 2) throw ConfigError("embedding dim must be at least 2");
  if (feature_buckets < dim) throw ConfigError("feature_buckets must be at least dim");
}

HashingEmbedder::HashingEmbedder(EmbedderConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = 0;
    const std::size_t len = decode_utf8(text, i, cp);
    if (is_unicode_space(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (len == 1 && cp < 0x80) {
      auto c = static_cast<char>(cp);
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      current.push_back(c);
    } else {
      current.append(text.substr(i, len));
    }
    i += len;
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Embedding embed_tokens(std::span<const std::string> tokens, const EmbedderConfig& cfg) {
  cfg.validate();
  if (tokens.empty()) return Embedding::basis(cfg.dim, 0);

  // Sparse bucket counts; ordered so accumulation order is fixed.
  std::map<std::uint64_t, double> counts;
  for (const auto& token : tokens) {
    const std::uint64_t h = mix64(fnv1a64(token) ^ cfg.seed);
    counts[h % cfg.feature_buckets] += 1.0;
  }

  const std::uint64_t sign_key = mix64(cfg.seed ^ 0x5ca1ab1e0ddba11ULL);
  std::vector<double> values(cfg.dim, 0.0);
  for (const auto& [bucket, count] : counts) {
    const std::uint64_t row = bucket * cfg.dim;
    for (std::size_t j = 0; j < cfg.dim; ++j) {
      values[j] += count * counter_sign(sign_key, row + j);
    }
  }
  if (squared_norm(values) == 0.0) return Embedding::basis(cfg.dim, 0);
  return Embedding::normalized(std::move(values));
}

Embedding embed_text(std::string_view text, const EmbedderConfig& cfg) {
  const auto tokens = tokenize(text);
  return embed_tokens(tokens, cfg);
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) throw DimensionError("cosine_similarity: dimension mismatch");
  const auto av = a.values();
  const auto bv = b.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  return std::clamp(acc, -1.0, 1.0);
}

}  // namespace ermar
