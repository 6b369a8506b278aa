#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lmkit/common.hpp"
#include "lmkit/matrix.hpp"
#include "lmkit/unicode.hpp"

namespace lmkit {

// Boundary tokens padding short contexts at sequence edges. Reserved: they
// never enter the vocabulary, only context keys.
inline constexpr std::string_view kBosForward = "<s>";
inline constexpr std::string_view kBosBackward = "</s>";

/// Split on Unicode whitespace. No lowercasing or other normalization —
/// rare surface forms keep their identity.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  std::size_t start = 0;
  bool in_token = false;
  while (i < text.size()) {
    const std::size_t at = i;
    const char32_t cp = utf8_next(text, i);
    if (is_unicode_space(cp)) {
      if (in_token) {
        out.emplace_back(text.substr(start, at - start));
        in_token = false;
      }
    } else if (!in_token) {
      start = at;
      in_token = true;
    }
  }
  if (in_token) out.emplace_back(text.substr(start));
  return out;
}

/// Every distinct token, dense first-occurrence ids, no truncation.
struct Vocabulary {
  std::vector<std::string> words;
  std::vector<std::uint64_t> counts;
  std::unordered_map<std::string, std::size_t> index;

  std::size_t add(const std::string& w) {
    auto [it, inserted] = index.try_emplace(w, words.size());
    if (inserted) {
      words.push_back(w);
      counts.push_back(0);
    }
    ++counts[it->second];
    return it->second;
  }

  std::optional<std::size_t> id(const std::string& w) const {
    auto it = index.find(w);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return words.size(); }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

inline Vocabulary build_vocab(const std::vector<std::string>& tokens) {
  Vocabulary v;
  for (const auto& t : tokens) v.add(t);
  return v;
}

enum class Direction { Forward, Backward };

struct ContextSpec {
  Direction direction = Direction::Forward;
  std::size_t k = 1;  // window: number of preceding (forward) or following tokens
};

/// Emit one (context window, target) pair per token. The window is the k
/// tokens before the target (forward) or the mirror image (after, farthest
/// first); positions near the edge are padded with the boundary token, so
/// pair count always equals token count.
inline void extract_pairs(
    const std::vector<std::string>& tokens, const ContextSpec& spec,
    const std::function<void(const std::vector<std::string>&, const std::string&)>& emit) {
  if (spec.k < 1) throw ContractError("context window k must be >= 1");
  const std::size_t n = tokens.size();
  const bool fwd = spec.direction == Direction::Forward;
  const std::string bos(fwd ? kBosForward : kBosBackward);
  std::vector<std::string> ctx(spec.k);
  for (std::size_t p = 0; p < n; ++p) {
    // Position in reading order for forward; from the end for backward.
    const std::size_t i = fwd ? p : n - 1 - p;
    for (std::size_t j = 0; j < spec.k; ++j) {
      // j-th context slot holds the token k-j steps away (farthest first).
      const std::size_t back = spec.k - j;
      if (fwd) {
        ctx[j] = (i >= back) ? tokens[i - back] : bos;
      } else {
        ctx[j] = (i + back < n) ? tokens[i + back] : bos;
      }
    }
    emit(ctx, tokens[i]);
  }
}

struct Pair {
  std::vector<std::string> context;
  std::string target;
};

inline std::vector<Pair> extract_pairs(const std::vector<std::string>& tokens,
                                       const ContextSpec& spec) {
  std::vector<Pair> out;
  extract_pairs(tokens, spec,
                [&](const std::vector<std::string>& c, const std::string& t) {
                  out.push_back({c, t});
                });
  return out;
}

inline std::string join_context(const std::vector<std::string>& ctx) {
  std::string key;
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    if (i) key += ' ';
    key += ctx[i];
  }
  return key;
}

/// #(c,w) occurrence counts. The counts map is sorted (canonical across
/// merge orders); context_rows remembers first-occurrence order so derived
/// matrices have stable rows.
struct PairCounts {
  std::map<std::pair<std::string, std::size_t>, std::uint64_t> counts;
  std::vector<std::string> context_rows;
  std::unordered_map<std::string, std::size_t> context_index;
  std::uint64_t total = 0;

  std::size_t context_row(const std::string& key) {
    auto [it, inserted] = context_index.try_emplace(key, context_rows.size());
    if (inserted) context_rows.push_back(key);
    return it->second;
  }

  void add(const std::string& context_key, std::size_t target_id, std::uint64_t n = 1) {
    context_row(context_key);
    counts[{context_key, target_id}] += n;
    total += n;
  }

  /// Pure addition — merging shards in any order yields the same counts.
  void merge(const PairCounts& other) {
    for (const auto& [key, n] : other.counts) add(key.first, key.second, n);
  }
};

/// Tokenize one document, fold its tokens into vocab, count its pairs.
inline void count_document(const std::string& line, const ContextSpec& spec, Vocabulary& vocab,
                           PairCounts& pc) {
  const auto tokens = tokenize(line);
  for (const auto& t : tokens) vocab.add(t);
  extract_pairs(tokens, spec, [&](const std::vector<std::string>& c, const std::string& t) {
    pc.add(join_context(c), *vocab.id(t));
  });
}

struct CorpusCounts {
  Vocabulary vocab;
  PairCounts pairs;
};

/// One document per line; contexts never cross line boundaries.
inline CorpusCounts count_corpus(std::istream& in, const ContextSpec& spec) {
  CorpusCounts cc;
  std::string line;
  while (std::getline(in, line)) count_document(line, spec, cc.vocab, cc.pairs);
  return cc;
}

inline CorpusCounts count_corpus_file(const std::string& path, const ContextSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open corpus file: " + path);
  return count_corpus(in, spec);
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open corpus file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

struct ConditionalProbMatrix {
  std::vector<std::string> contexts;  // N distinct keys, first-occurrence order
  DMat p;                             // N x V, row-stochastic
};

inline ConditionalProbMatrix conditional_matrix(const PairCounts& pairs,
                                                const Vocabulary& vocab) {
  if (pairs.counts.empty()) throw ContractError("conditional matrix needs at least one pair");
  ConditionalProbMatrix m;
  m.contexts = pairs.context_rows;
  m.p = DMat(m.contexts.size(), vocab.size(), 0.0);
  for (const auto& [key, n] : pairs.counts) {
    const auto row = pairs.context_index.at(key.first);
    m.p.at(row, key.second) += static_cast<double>(n);
  }
  for (std::size_t r = 0; r < m.p.rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < m.p.cols; ++c) s += m.p.at(r, c);
    for (std::size_t c = 0; c < m.p.cols; ++c) m.p.at(r, c) /= s;
  }
  return m;
}

/// TSV export: context-tokens<TAB>target<TAB>count, in sorted-key order.
inline void write_pairs_tsv(std::ostream& out, const PairCounts& pairs,
                            const Vocabulary& vocab) {
  for (const auto& [key, n] : pairs.counts) {
    out << key.first << '\t' << vocab.words[key.second] << '\t' << n << '\n';
  }
}

}  // namespace lmkit
