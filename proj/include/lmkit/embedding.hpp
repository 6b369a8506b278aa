#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lmkit/common.hpp"
#include "lmkit/matrix.hpp"
#include "lmkit/unicode.hpp"

namespace lmkit {

/// Character n-grams of the '<'-wrapped word, codepoint-aware, emitted
/// left-to-right within each length, shortest length first. The full wrapped
/// form is appended as an extra entry when it is longer than nmax (otherwise
/// it already appeared as a window, or the word has no representation at all
/// and lookup's unrepresentable-token error stays reachable).
inline std::vector<std::string> extract_ngrams(const std::string& word, std::size_t nmin,
                                               std::size_t nmax) {
  if (word.empty()) throw ContractError("extract_ngrams: empty word");
  if (nmin > nmax || nmin == 0) throw ContractError("extract_ngrams: need 1 <= nmin <= nmax");
  const std::string wrapped = "<" + word + ">";
  const auto off = codepoint_offsets(wrapped);
  const std::size_t len = off.size() - 1;  // codepoints
  std::vector<std::string> out;
  for (std::size_t n = nmin; n <= nmax && n <= len; ++n) {
    for (std::size_t i = 0; i + n <= len; ++i) {
      out.emplace_back(wrapped.substr(off[i], off[i + n] - off[i]));
    }
  }
  if (len > nmax) out.push_back(wrapped);
  return out;
}

inline std::size_t hash_ngram(std::string_view ngram, std::size_t buckets) {
  if (buckets == 0) throw ContractError("hash_ngram: B must be >= 1");
  return static_cast<std::size_t>(fnv1a64(ngram) % buckets);
}

/// Fixed word representations: a dense row per known word plus hashed
/// character-n-gram buckets composing vectors for anything else.
struct EmbeddingTable {
  std::size_t m = 0;
  std::size_t nmin = 3;
  std::size_t nmax = 6;
  FMat words;    // V x m
  FMat buckets;  // B x m
  std::vector<std::string> vocab;
  std::unordered_map<std::string, std::size_t> word_index;
  // Whether in-vocabulary lookups blend in the subword buckets or return the
  // word row alone.
  bool compose_in_vocab = true;

  std::size_t v() const { return words.rows; }
  std::size_t b() const { return buckets.rows; }

  void set_vocab(std::vector<std::string> w) {
    vocab = std::move(w);
    word_index.clear();
    word_index.reserve(vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) word_index.emplace(vocab[i], i);
  }

  std::optional<std::size_t> row_of(const std::string& word) const {
    auto it = word_index.find(word);
    if (it == word_index.end()) return std::nullopt;
    return it->second;
  }

  /// Mean of the word's n-gram bucket vectors, plus its word row when known.
  /// Every non-empty string with at least one n-gram window resolves.
  Vec lookup(const std::string& word) const {
    const auto row = row_of(word);
    Vec out(m, 0.0);
    if (row && !compose_in_vocab) {
      const float* ws = words[*row];
      for (std::size_t d = 0; d < m; ++d) out[d] = ws[d];
      return out;
    }
    const auto grams = extract_ngrams(word, nmin, nmax);
    if (grams.empty() && !row)
      throw ContractError("unrepresentable token: \"" + word + "\"");
    for (const auto& g : grams) {
      const float* bs = buckets[hash_ngram(g, buckets.rows)];
      for (std::size_t d = 0; d < m; ++d) out[d] += bs[d];
    }
    if (!grams.empty()) {
      const double inv = 1.0 / static_cast<double>(grams.size());
      for (double& x : out) x *= inv;
    }
    if (row) {
      const float* ws = words[*row];
      for (std::size_t d = 0; d < m; ++d) out[d] += ws[d];
    }
    return out;
  }
};

/// Same table, every emitted vector scaled to unit L2 norm.
struct NormalizedEmbeddingTable {
  const EmbeddingTable* base;

  Vec lookup(const std::string& word) const {
    Vec v = base->lookup(word);
    const double n = norm(v);
    if (n < 1e-12) throw NumericError("zero embedding vector for token \"" + word + "\"");
    for (double& x : v) x /= n;
    return v;
  }
};

// ---------------------------------------------------------------------------
// Text vector format: header "V m", then one "word v1 ... vm" line per word.

inline EmbeddingTable load_text_embeddings(std::istream& in, std::size_t bucket_count = 100'000,
                                           std::size_t nmin = 3, std::size_t nmax = 6) {
  std::string line;
  if (!std::getline(in, line)) throw UsageError("embedding file: missing header line");
  std::size_t v = 0, m = 0;
  {
    std::istringstream hs(line);
    if (!(hs >> v >> m) || m == 0) throw UsageError("embedding file: bad header at line 1");
  }
  EmbeddingTable t;
  t.m = m;
  t.nmin = nmin;
  t.nmax = nmax;
  t.words = FMat(v, m);
  t.buckets = FMat(bucket_count, m, 0.0f);
  std::vector<std::string> vocab;
  vocab.reserve(v);
  for (std::size_t r = 0; r < v; ++r) {
    if (!std::getline(in, line))
      throw UsageError("embedding file: expected " + std::to_string(v) + " rows, got " +
                       std::to_string(r) + " (line " + std::to_string(r + 2) + ")");
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word))
      throw UsageError("embedding file: empty row at line " + std::to_string(r + 2));
    float* dst = t.words[r];
    std::string tok;
    std::size_t d = 0;
    for (; d < m && (ls >> tok); ++d) {
      char* end = nullptr;
      dst[d] = std::strtof(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0')
        throw UsageError("embedding file: bad number at line " + std::to_string(r + 2));
    }
    if (d != m || (ls >> tok))
      throw UsageError("embedding file: expected " + std::to_string(m) + " values at line " +
                       std::to_string(r + 2));
    vocab.push_back(word);
  }
  t.set_vocab(std::move(vocab));
  return t;
}

inline EmbeddingTable load_text_embeddings_file(const std::string& path,
                                                std::size_t bucket_count = 100'000,
                                                std::size_t nmin = 3, std::size_t nmax = 6) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open embedding file: " + path);
  return load_text_embeddings(in, bucket_count, nmin, nmax);
}

inline void save_text_embeddings(std::ostream& out, const EmbeddingTable& t) {
  out << t.v() << ' ' << t.m << '\n';
  out << std::setprecision(std::numeric_limits<float>::max_digits10);
  for (std::size_t r = 0; r < t.v(); ++r) {
    out << t.vocab[r];
    const float* row = t.words[r];
    for (std::size_t d = 0; d < t.m; ++d) out << ' ' << row[d];
    out << '\n';
  }
}

inline void save_text_embeddings_file(const std::string& path, const EmbeddingTable& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write embedding file: " + path);
  save_text_embeddings(out, t);
}

// ---------------------------------------------------------------------------
// Companion bucket file: u64 LE B, u64 LE m, then B*m little-endian f32.

namespace detail {
inline void put_u64le(std::ostream& out, std::uint64_t x) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}
inline std::uint64_t get_u64le(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw UsageError("bucket file: truncated header");
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return x;
}
inline void put_f32le(std::ostream& out, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}
inline float get_f32le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw UsageError("bucket file: truncated data");
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}
}  // namespace detail

inline void save_buckets_file(const std::string& path, const EmbeddingTable& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write bucket file: " + path);
  detail::put_u64le(out, t.buckets.rows);
  detail::put_u64le(out, t.m);
  for (float v : t.buckets.data) detail::put_f32le(out, v);
}

inline void load_buckets_file(const std::string& path, EmbeddingTable& t) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open bucket file: " + path);
  const auto b = detail::get_u64le(in);
  const auto m = detail::get_u64le(in);
  if (m != t.m)
    throw UsageError("bucket file dimension " + std::to_string(m) + " != table dimension " +
                     std::to_string(t.m));
  t.buckets = FMat(static_cast<std::size_t>(b), t.m);
  for (float& v : t.buckets.data) v = detail::get_f32le(in);
}

/// Seeded gaussian table (scale 1/sqrt(m)). Gives hapax and OOV words
/// nonzero bucket vectors, which the unit-normalizing losses require.
inline EmbeddingTable random_embedding_table(std::vector<std::string> vocab, std::size_t m,
                                             std::size_t bucket_count, std::uint64_t seed,
                                             std::size_t nmin = 3, std::size_t nmax = 6) {
  EmbeddingTable t;
  t.m = m;
  t.nmin = nmin;
  t.nmax = nmax;
  Rng rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(m));
  t.words = FMat(vocab.size(), m);
  t.words.fill_gaussian(rng, s);
  t.buckets = FMat(bucket_count, m);
  t.buckets.fill_gaussian(rng, s);
  t.set_vocab(std::move(vocab));
  return t;
}

}  // namespace lmkit
