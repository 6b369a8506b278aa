#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lmkit/common.hpp"
#include "lmkit/corpus.hpp"
#include "lmkit/matrix.hpp"
#include "lmkit/output_layer.hpp"
#include "lmkit/svd.hpp"

namespace lmkit {

// ---------------------------------------------------------------------------
// Weighted-average targets and the optimal-direction claim

/// Exact Σ_w p(w)·w over the rows of a (V x m) target matrix.
inline Vec weighted_average_target(std::span<const double> p_row, const DMat& w) {
  if (p_row.size() != w.rows) throw ContractError("probability row length != vocabulary size");
  Vec out(w.cols, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) axpy(p_row[r], w.row(r), out);
  return out;
}

/// Minimize the expected negative-cosine loss Σ_w p(w)·(-c̄·w) over c by
/// plain gradient descent from a seeded random start. This is the
/// per-context "direct optimization" mode: no encoder in the loop, so the
/// result isolates what the loss itself wants c to be.
inline Vec optimize_context_direction(std::span<const double> p_row, const DMat& w,
                                      std::size_t iters = 300, double lr = 0.5,
                                      std::uint64_t seed = 7) {
  if (p_row.size() != w.rows) throw ContractError("probability row length != vocabulary size");
  Rng rng(seed);
  Vec c(w.cols);
  for (auto& x : c) x = rng.gaussian();
  c = normalized(c);

  // Expected gradient of -c̄·w over the row's distribution:
  //   dc = -(w_avg - (c̄·w_avg) c̄) / |c|  with w_avg = Σ p(w) w.
  const Vec t = weighted_average_target(p_row, w);
  Vec grad(w.cols);
  for (std::size_t it = 0; it < iters; ++it) {
    const double n = norm(c);
    const double ct = dot(c, t) / n;
    for (std::size_t d = 0; d < w.cols; ++d)
      grad[d] = -(t[d] - ct * c[d] / n) / n;
    for (std::size_t d = 0; d < w.cols; ++d) c[d] -= lr * grad[d];
  }
  return c;
}

struct GlobalObjectiveReport {
  std::vector<std::string> contexts;
  Vec similarity;        // cosine(c, normalized Σ p(w|context)·w) per context
  double weighted_mean;  // corpus-weighted mean similarity
  double min_similarity;
};

struct DirectionOptions {
  std::size_t max_contexts = 100'000;  // enumeration guard
  std::size_t iters = 300;
  double lr = 0.5;
  std::uint64_t seed = 7;
};

/// Compare caller-provided context vectors (e.g. from a trained encoder, or
/// from the direct optimizer) against each context's weighted-average target
/// direction.
inline GlobalObjectiveReport direction_report(const ConditionalProbMatrix& pm,
                                              const DMat& targets,
                                              const std::vector<Vec>& context_vecs,
                                              std::span<const double> weights = {}) {
  if (pm.p.cols != targets.rows)
    throw ContractError("probability matrix vocabulary != target row count");
  if (context_vecs.size() != pm.contexts.size())
    throw ContractError("one context vector required per context");
  if (!weights.empty() && weights.size() != pm.contexts.size())
    throw ContractError("one weight required per context");

  GlobalObjectiveReport rep;
  rep.contexts = pm.contexts;
  rep.similarity.resize(pm.contexts.size());
  double wsum = 0.0, acc = 0.0;
  rep.min_similarity = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pm.contexts.size(); ++i) {
    const Vec avg = weighted_average_target(pm.p.row(i), targets);
    double sim = 0.0;  // degenerate average (cancelling targets) scores zero
    if (norm(avg) > 1e-12 && norm(context_vecs[i]) > 1e-12)
      sim = cosine(context_vecs[i], avg);
    rep.similarity[i] = sim;
    const double weight = weights.empty() ? 1.0 : weights[i];
    acc += weight * sim;
    wsum += weight;
    rep.min_similarity = std::min(rep.min_similarity, sim);
  }
  rep.weighted_mean = wsum > 0.0 ? acc / wsum : 0.0;
  return rep;
}

/// Direct-optimization direction check: optimize c per context, then compare
/// with the weighted-average direction. At convergence the similarity is
/// expected to exceed 0.999 for every context with a non-degenerate average.
inline GlobalObjectiveReport optimal_direction_check(const ConditionalProbMatrix& pm,
                                                     const DMat& targets,
                                                     std::span<const double> weights = {},
                                                     const DirectionOptions& opt = {}) {
  if (pm.contexts.size() > opt.max_contexts)
    throw ContractError("context set too large to enumerate (" +
                        std::to_string(pm.contexts.size()) + " > " +
                        std::to_string(opt.max_contexts) +
                        "); sample the corpus down before running the direction check");
  std::vector<Vec> opts;
  opts.reserve(pm.contexts.size());
  for (std::size_t i = 0; i < pm.contexts.size(); ++i)
    opts.push_back(optimize_context_direction(pm.p.row(i), targets, opt.iters, opt.lr,
                                              opt.seed + i));
  return direction_report(pm, targets, opts, weights);
}

// ---------------------------------------------------------------------------
// Projection study

struct ProjectionCandidate {
  std::string name;
  DMat w;  // V x m projection columns
};

struct ProjectionStudy {
  std::vector<std::string> names;
  Vec errors;  // Frobenius reconstruction error per candidate
  std::size_t best = 0;
};

namespace detail {

/// Least-squares re-expansion residual: min_G |P - (P W) G|_F via the
/// pseudo-inverse of Z = P W (singular values below 1e-10·sigma_max dropped).
inline double reexpansion_error(const DMat& p, const DMat& w) {
  if (w.rows != p.cols) throw ContractError("projection row count != vocabulary size");
  DMat z = matmul(p, w);  // N x m
  const Svd zs = svd(z);
  const double tol = 1e-10 * (zs.sigma.empty() ? 0.0 : zs.sigma[0]);

  // G = V Σ⁺ Uᵀ P, reconstruction R = Z G = U Uᵀ P restricted to kept
  // directions; residual = |P - U Uᵀ P|_F over kept columns of U.
  DMat r = p;
  for (std::size_t k = 0; k < zs.sigma.size(); ++k) {
    if (zs.sigma[k] <= tol) continue;
    // r -= u_k (u_kᵀ p)
    Vec utp(p.cols, 0.0);
    for (std::size_t i = 0; i < p.rows; ++i) {
      const double u = zs.u.at(i, k);
      if (u == 0.0) continue;
      for (std::size_t j = 0; j < p.cols; ++j) utp[j] += u * p.at(i, j);
    }
    for (std::size_t i = 0; i < p.rows; ++i) {
      const double u = zs.u.at(i, k);
      for (std::size_t j = 0; j < p.cols; ++j) r.at(i, j) -= u * utp[j];
    }
  }
  return frobenius_norm(r);
}

}  // namespace detail

/// Score every candidate projection by how well P can be rebuilt from its
/// projected scores. The SVD-derived candidate must attain the minimum
/// (Eckart–Young); ties resolve to the earliest candidate.
inline ProjectionStudy svd_projection_study(const DMat& p,
                                            const std::vector<ProjectionCandidate>& candidates) {
  if (candidates.empty()) throw ContractError("no projection candidates");
  ProjectionStudy study;
  study.errors.reserve(candidates.size());
  for (const auto& cand : candidates) {
    study.names.push_back(cand.name);
    study.errors.push_back(detail::reexpansion_error(p, cand.w));
  }
  study.best = static_cast<std::size_t>(
      std::min_element(study.errors.begin(), study.errors.end()) - study.errors.begin());
  return study;
}

/// The top-m right-singular-vector projection V_m of P, as a V x m matrix.
inline DMat svd_projection(const DMat& p, std::size_t m) {
  const Svd s = svd(p);
  if (m > s.sigma.size()) throw ContractError("projection rank exceeds available spectrum");
  DMat w(p.cols, m);
  for (std::size_t r = 0; r < p.cols; ++r)
    for (std::size_t k = 0; k < m; ++k) w.at(r, k) = s.v.at(r, k);
  return w;
}

// ---------------------------------------------------------------------------
// Nearest-neighbor decoding

enum class DecodeMetric { Cosine, L2 };

/// Nearest row of `rows` to c: argmax cosine or argmin euclidean distance.
/// Ties break to the lowest word id for determinism.
inline std::size_t nn_decode(std::span<const double> c, const DMat& rows, DecodeMetric metric) {
  if (rows.rows == 0) throw ContractError("empty decode table");
  if (c.size() != rows.cols) throw ContractError("context vector dimension mismatch");
  if (metric == DecodeMetric::Cosine && norm(c) <= 1e-8)
    throw NumericError("degenerate context vector (norm <= 1e-8)");

  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < rows.rows; ++r) {
    double score;
    if (metric == DecodeMetric::Cosine) {
      score = cosine(c, rows.row(r));
    } else {
      double ss = 0.0;
      for (std::size_t d = 0; d < c.size(); ++d) {
        const double diff = c[d] - rows.at(r, d);
        ss += diff * diff;
      }
      score = -ss;
    }
    if (score > best_score) {  // strict: first (lowest id) winner is kept
      best_score = score;
      best = r;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Decode agreement

struct DecodeRow {
  std::size_t argmax_id;  // most probable word under p(·|context)
  std::size_t decode_id;  // nearest neighbor of the weighted-average vector
  bool agree;
  double sharpness;  // max_w p(w|context)
};

/// Sharpness strata: [0,0.5) [0.5,0.7) [0.7,0.9) [0.9,1.0].
inline constexpr std::array<double, 5> kSharpnessBins{0.0, 0.5, 0.7, 0.9, 1.0};

struct DecodeReport {
  std::vector<DecodeRow> rows;                 // context order
  std::array<std::size_t, 4> bin_total{};     // contexts per sharpness bin
  std::array<std::size_t, 4> bin_agree{};
  double agreement_rate = 0.0;

  static std::size_t bin_of(double sharpness) {
    for (std::size_t b = 3; b > 0; --b)
      if (sharpness >= kSharpnessBins[b]) return b;
    return 0;
  }
};

/// For each context row: compare argmax_w p(w|c) with the nearest-neighbor
/// decode of the weighted-average target vector.
inline DecodeReport decode_agreement(const DMat& p, const DMat& w_rows, DecodeMetric metric) {
  if (p.cols != w_rows.rows) throw ContractError("probability matrix vocabulary != row count");
  DecodeReport rep;
  rep.rows.reserve(p.rows);
  std::size_t agreed = 0;
  for (std::size_t i = 0; i < p.rows; ++i) {
    const auto row = p.row(i);
    std::size_t argmax = 0;
    for (std::size_t w = 1; w < row.size(); ++w)
      if (row[w] > row[argmax]) argmax = w;  // strict: ties keep lowest id

    const Vec avg = weighted_average_target(row, w_rows);
    const std::size_t decoded = nn_decode(avg, w_rows, metric);

    DecodeRow r;
    r.argmax_id = argmax;
    r.decode_id = decoded;
    r.agree = decoded == argmax;
    r.sharpness = row[argmax];
    rep.rows.push_back(r);

    const std::size_t b = DecodeReport::bin_of(r.sharpness);
    rep.bin_total[b]++;
    if (r.agree) {
      rep.bin_agree[b]++;
      ++agreed;
    }
  }
  rep.agreement_rate = p.rows == 0 ? 0.0 : static_cast<double>(agreed) / p.rows;
  return rep;
}

// ---------------------------------------------------------------------------
// Perplexity

/// exp(mean negative log-likelihood per token) from per-token log
/// probabilities.
inline double perplexity_from_log_probs(std::span<const double> log_probs) {
  if (log_probs.empty()) throw ContractError("perplexity of an empty evaluation set");
  double total = 0.0;
  for (double lp : log_probs) total += lp;
  return std::exp(-total / static_cast<double>(log_probs.size()));
}

/// Perplexity of an output layer over (context vector, target) pairs.
/// Distance heads produce no normalized distribution, so asking for their
/// perplexity is a contract violation rather than a number.
inline double perplexity(const OutputLayer& layer, const std::vector<Vec>& contexts,
                         const std::vector<std::size_t>& targets) {
  if (contexts.size() != targets.size())
    throw ContractError("contexts/targets length mismatch");
  Vec lps;
  lps.reserve(contexts.size());
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const auto lp = layer.log_prob(contexts[i], targets[i]);
    if (!lp) throw ContractError("perplexity undefined for SemFit");
    lps.push_back(*lp);
  }
  return perplexity_from_log_probs(lps);
}

}  // namespace lmkit
