#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lmkit/common.hpp"
#include "lmkit/embedding.hpp"
#include "lmkit/matrix.hpp"
#include "lmkit/output_layer.hpp"
#include "lmkit/vmf.hpp"

namespace lmkit {

/// Fixed target vectors, one float32 row per word id. Rows are composed
/// (and, for the angular losses, unit-normalized) once up front; training
/// never touches them again. float rows with double arithmetic on top keep
/// the big-vocabulary tables affordable.
struct TargetTable {
  FMat rows;  // V x m

  std::size_t v() const { return rows.rows; }
  std::size_t m() const { return rows.cols; }

  static TargetTable from_embeddings(const EmbeddingTable& table,
                                     const std::vector<std::string>& words, bool normalize) {
    TargetTable t;
    t.rows = FMat(words.size(), table.m);
    for (std::size_t i = 0; i < words.size(); ++i) {
      Vec v = table.lookup(words[i]);
      if (normalize) {
        const double n = norm(v);
        if (n < 1e-12)
          throw NumericError("zero embedding vector for target word \"" + words[i] + "\"");
        for (double& x : v) x /= n;
      }
      float* dst = t.rows[i];
      for (std::size_t d = 0; d < v.size(); ++d) dst[d] = static_cast<float>(v[d]);
    }
    return t;
  }

  /// Synthetic table for benchmarks: unit-normalized gaussian rows.
  static TargetTable random(std::size_t v, std::size_t m, std::uint64_t seed) {
    TargetTable t;
    t.rows = FMat(v, m);
    Rng rng(seed);
    for (std::size_t r = 0; r < v; ++r) {
      float* row = t.rows[r];
      double ss = 0.0;
      for (std::size_t d = 0; d < m; ++d) {
        const double g = rng.gaussian();
        row[d] = static_cast<float>(g);
        ss += g * g;
      }
      const double inv = 1.0 / std::sqrt(ss);
      for (std::size_t d = 0; d < m; ++d) row[d] = static_cast<float>(row[d] * inv);
    }
    return t;
  }
};

/// Common scaffolding for the distance heads: no trainable parameters, no
/// gradient payload, vocabulary-independent flop count.
class SemFitBase : public OutputLayer {
 public:
  explicit SemFitBase(TargetTable targets) : targets_(std::move(targets)) {}

  std::size_t trainable_param_count() const final { return 0; }

  // 3m MACs per example: one pass against the target row, one over c itself
  // (norm or residual), one assembling dc; plus 8 flops of scalar epilogue
  // (norms, ratios, special-function plumbing excluded from MAC counting).
  std::uint64_t flop_count(std::size_t batch) const final {
    return static_cast<std::uint64_t>(batch) * (3 * static_cast<std::uint64_t>(dim()) + 8);
  }

  std::uint64_t grad_payload_bytes(std::size_t) const final { return 0; }

  void apply_grad(const Vec& grad, double) final {
    if (!grad.empty()) throw ContractError(kind() + " has no trainable parameters");
  }

  std::size_t dim() const final { return targets_.m(); }
  std::size_t vocab_size() const final { return targets_.v(); }

 protected:
  std::span<const float> target_row(std::size_t target) const {
    if (target >= targets_.v())
      throw ContractError("target id " + std::to_string(target) + " out of range (V=" +
                          std::to_string(targets_.v()) + ")");
    return targets_.rows.row(target);
  }
  static void check_dims(std::span<const double> c, std::size_t m) {
    if (c.size() != m) throw ContractError("context vector dimension mismatch");
  }

  TargetTable targets_;
};

/// Squared euclidean distance to the raw target vector.
class SemFitL2 final : public SemFitBase {
 public:
  using SemFitBase::SemFitBase;

  LossGrad loss_and_grad(std::span<const double> c, std::size_t target,
                         Vec* param_grad = nullptr) const override {
    const auto w = target_row(target);
    check_dims(c, w.size());
    if (param_grad) param_grad->clear();
    LossGrad out;
    out.dc.resize(c.size());
    double loss = 0.0;
    for (std::size_t d = 0; d < c.size(); ++d) {
      const double diff = c[d] - static_cast<double>(w[d]);
      loss += diff * diff;
      out.dc[d] = 2.0 * diff;
    }
    out.loss = loss;
    return out;
  }

  std::string kind() const override { return "semfit_l2"; }
};

/// Negative cosine against the unit-normalized target.
class SemFitCosine final : public SemFitBase {
 public:
  using SemFitBase::SemFitBase;

  LossGrad loss_and_grad(std::span<const double> c, std::size_t target,
                         Vec* param_grad = nullptr) const override {
    const auto w = target_row(target);
    check_dims(c, w.size());
    if (param_grad) param_grad->clear();
    const double n = norm(c);
    if (n <= 1e-8) throw NumericError("degenerate context vector (norm <= 1e-8)");
    double cw = 0.0;
    for (std::size_t d = 0; d < c.size(); ++d) cw += c[d] * static_cast<double>(w[d]);
    cw /= n;
    LossGrad out;
    out.loss = -cw;
    out.dc.resize(c.size());
    for (std::size_t d = 0; d < c.size(); ++d) {
      const double cbar = c[d] / n;
      out.dc[d] = -(static_cast<double>(w[d]) - cw * cbar) / n;
    }
    return out;
  }

  std::string kind() const override { return "semfit_cosine"; }
};

/// Negative log von Mises-Fisher likelihood:
///   loss = -log C_m(|c|) - lambda2 c·w + lambda1 |c|
///   dc   = (R_m(|c|) + lambda1) c_hat - lambda2 w
/// with R_m(k) = I_{m/2}(k) / I_{m/2-1}(k).
class SemFitNllvmf final : public SemFitBase {
 public:
  SemFitNllvmf(TargetTable targets, double lambda1, double lambda2)
      : SemFitBase(std::move(targets)), lambda1_(lambda1), lambda2_(lambda2) {
    if (lambda1 < 0.0 || lambda2 < 0.0)
      throw ContractError("nllvmf: lambda1 and lambda2 must be nonnegative");
  }

  LossGrad loss_and_grad(std::span<const double> c, std::size_t target,
                         Vec* param_grad = nullptr) const override {
    const auto w = target_row(target);
    check_dims(c, w.size());
    if (param_grad) param_grad->clear();
    const double n = norm(c);
    if (n <= 1e-8) throw NumericError("degenerate context vector (norm <= 1e-8)");
    const std::size_t m = c.size();
    double cw = 0.0;
    for (std::size_t d = 0; d < m; ++d) cw += c[d] * static_cast<double>(w[d]);
    const double nu = static_cast<double>(m) / 2.0 - 1.0;
    const double ratio = bessel_ratio(nu, n);
    LossGrad out;
    out.loss = -log_cm(n, m) - lambda2_ * cw + lambda1_ * n;
    out.dc.resize(m);
    for (std::size_t d = 0; d < m; ++d) {
      out.dc[d] = (ratio + lambda1_) * (c[d] / n) - lambda2_ * static_cast<double>(w[d]);
    }
    return out;
  }

  std::string kind() const override { return "semfit_nllvmf"; }

  double lambda1() const { return lambda1_; }
  double lambda2() const { return lambda2_; }

 private:
  double lambda1_;
  double lambda2_;
};

}  // namespace lmkit
