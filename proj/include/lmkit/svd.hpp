#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "lmkit/common.hpp"
#include "lmkit/embedding.hpp"
#include "lmkit/matrix.hpp"

namespace lmkit {

struct Svd {
  DMat u;     // rows x r, orthonormal columns (zero where sigma is zero)
  Vec sigma;  // r, descending
  DMat v;     // cols x r, orthonormal columns
};

namespace detail {

/// One-sided (Hestenes) Jacobi on the columns of a copy of `a`: right
/// rotations make the columns mutually orthogonal, accumulating them into v.
/// Column norms become the singular values. Assumes cols <= rows is the
/// cheap orientation but works for any shape.
inline Svd jacobi_svd_tall(const DMat& a) {
  const std::size_t n = a.rows, d = a.cols;
  DMat b = a;
  DMat v(d, d, 0.0);
  for (std::size_t i = 0; i < d; ++i) v.at(i, i) = 1.0;

  const double eps = 1e-14;
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          const double x = b.at(r, p), y = b.at(r, q);
          app += x * x;
          aqq += y * y;
          apq += x * y;
        }
        if (std::abs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (std::size_t r = 0; r < n; ++r) {
          const double x = b.at(r, p), y = b.at(r, q);
          b.at(r, p) = cs * x - sn * y;
          b.at(r, q) = sn * x + cs * y;
        }
        for (std::size_t r = 0; r < d; ++r) {
          const double x = v.at(r, p), y = v.at(r, q);
          v.at(r, p) = cs * x - sn * y;
          v.at(r, q) = sn * x + cs * y;
        }
      }
    }
    if (!rotated) break;
  }

  Vec sigma(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += b.at(r, c) * b.at(r, c);
    sigma[c] = std::sqrt(s);
  }
  // Descending order.
  std::vector<std::size_t> ord(d);
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(), [&](auto i, auto j) { return sigma[i] > sigma[j]; });

  Svd out;
  out.sigma.resize(d);
  out.u = DMat(n, d, 0.0);
  out.v = DMat(d, d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t c = ord[k];
    out.sigma[k] = sigma[c];
    if (sigma[c] > 0.0) {
      for (std::size_t r = 0; r < n; ++r) out.u.at(r, k) = b.at(r, c) / sigma[c];
    }
    for (std::size_t r = 0; r < d; ++r) out.v.at(r, k) = v.at(r, c);
  }
  return out;
}

}  // namespace detail

/// Thin SVD a = u diag(sigma) v^T with r = min(rows, cols) columns.
/// Rotations run on the smaller side.
inline Svd svd(const DMat& a) {
  if (a.rows == 0 || a.cols == 0) throw ContractError("svd: empty matrix");
  if (a.cols <= a.rows) return detail::jacobi_svd_tall(a);
  Svd t = detail::jacobi_svd_tall(transposed(a));
  return {std::move(t.v), std::move(t.sigma), std::move(t.u)};
}

inline DMat svd_reconstruct(const Svd& s, std::size_t rank) {
  const std::size_t r = std::min(rank, s.sigma.size());
  DMat out(s.u.rows, s.v.rows, 0.0);
  for (std::size_t k = 0; k < r; ++k) {
    for (std::size_t i = 0; i < s.u.rows; ++i) {
      const double us = s.u.at(i, k) * s.sigma[k];
      if (us == 0.0) continue;
      for (std::size_t j = 0; j < s.v.rows; ++j) out.at(i, j) += us * s.v.at(j, k);
    }
  }
  return out;
}

inline std::size_t numerical_rank(const Vec& sigma, double rel_tol = 1e-12) {
  if (sigma.empty()) return 0;
  const double cut = sigma.front() * rel_tol;
  std::size_t r = 0;
  while (r < sigma.size() && sigma[r] > cut) ++r;
  return r;
}

struct SvdTrainResult {
  EmbeddingTable table;
  bool rank_limited = false;  // requested dimension exceeded numerical rank
  std::size_t rank = 0;
};

/// Factor a conditional-probability (or PMI) matrix M = U S V^T and take
/// rows of V_m scaled by sigma^alpha as word vectors: alpha=0 keeps the
/// orthonormal right factor, alpha=1 weights by singular value.
///
/// SVD training produces no subword model; by default the bucket table is a
/// single zero row, so out-of-vocabulary lookups compose to zero. Passing
/// bucket_count > 0 fills that many seeded gaussian buckets instead, which
/// gives OOV and boundary tokens distinct nonzero *input* vectors (targets
/// always come from the trained word rows).
inline SvdTrainResult train_svd_embedding(const DMat& m_matrix,
                                          const std::vector<std::string>& vocab_words,
                                          std::size_t dim, double alpha,
                                          std::size_t bucket_count = 0,
                                          std::uint64_t bucket_seed = 1) {
  if (vocab_words.size() != m_matrix.cols)
    throw ContractError("train_svd_embedding: vocab size must match matrix columns");
  if (dim < 1 || dim > std::min(m_matrix.rows, m_matrix.cols))
    throw ContractError("train_svd_embedding: need 1 <= m <= min(N,V)");
  if (alpha < 0.0 || alpha > 1.0)
    throw ContractError("train_svd_embedding: need 0 <= alpha <= 1");

  const Svd s = svd(m_matrix);
  const std::size_t rank = numerical_rank(s.sigma);
  SvdTrainResult out;
  out.rank = rank;
  out.rank_limited = dim > rank;
  const std::size_t keep = std::min(dim, std::max<std::size_t>(rank, 1));

  EmbeddingTable& t = out.table;
  t.m = keep;
  // Trained rows are the representation; never blend bucket noise into them.
  t.compose_in_vocab = false;
  t.words = FMat(m_matrix.cols, keep);
  if (bucket_count == 0) {
    t.buckets = FMat(1, keep, 0.0f);
  } else {
    t.buckets = FMat(bucket_count, keep);
    Rng rng(bucket_seed);
    t.buckets.fill_gaussian(rng, 1.0 / std::sqrt(static_cast<double>(keep)));
  }
  for (std::size_t w = 0; w < m_matrix.cols; ++w) {
    float* dst = t.words[w];
    for (std::size_t k = 0; k < keep; ++k) {
      const double scale = alpha == 0.0 ? 1.0 : std::pow(s.sigma[k], alpha);
      dst[k] = static_cast<float>(scale * s.v.at(w, k));
    }
  }
  t.set_vocab(vocab_words);
  return out;
}

}  // namespace lmkit
