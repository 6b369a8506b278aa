#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lmkit/common.hpp"
#include "lmkit/matrix.hpp"
#include "lmkit/output_layer.hpp"

namespace lmkit {

namespace detail {

/// Stable log-sum-exp with max subtraction. Returns (lse, max index unused).
inline double log_sum_exp(std::span<const double> logits) {
  double mx = logits[0];
  for (double l : logits) mx = std::max(mx, l);
  double s = 0.0;
  for (double l : logits) s += std::exp(l - mx);
  return mx + std::log(s);
}

inline DMat seeded_rows(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  DMat w(rows, cols);
  Rng rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(cols));
  for (auto& x : w.data) x = s * rng.gaussian();
  return w;
}

}  // namespace detail

/// Plain normalized softmax over the whole vocabulary.
///   loss = -c·w_t + log sum_w' exp(c·w')
///   dc   = -w_t + sum p(w'|c) w'
///   dW   = (p - one_hot(t)) outer c
class FullSoftmax final : public OutputLayer {
 public:
  FullSoftmax(std::size_t v, std::size_t m, std::uint64_t seed)
      : w_(detail::seeded_rows(v, m, seed)) {}
  explicit FullSoftmax(DMat w) : w_(std::move(w)) {}

  LossGrad loss_and_grad(std::span<const double> c, std::size_t target,
                         Vec* param_grad = nullptr) const override {
    if (target >= w_.rows) throw ContractError("target id out of range");
    if (c.size() != w_.cols) throw ContractError("context vector dimension mismatch");
    Vec logits(w_.rows);
    matvec(w_, c, logits);
    const double lse = detail::log_sum_exp(logits);

    LossGrad out;
    out.loss = lse - logits[target];
    out.dc.assign(c.size(), 0.0);
    if (param_grad) param_grad->assign(w_.size(), 0.0);
    for (std::size_t r = 0; r < w_.rows; ++r) {
      const double p = std::exp(logits[r] - lse);
      const double coeff = p - (r == target ? 1.0 : 0.0);
      axpy(coeff, w_.row(r), out.dc);
      if (param_grad) {
        double* g = param_grad->data() + r * w_.cols;
        for (std::size_t d = 0; d < w_.cols; ++d) g[d] += coeff * c[d];
      }
    }
    return out;
  }

  std::optional<double> log_prob(std::span<const double> c, std::size_t target) const override {
    if (target >= w_.rows) throw ContractError("target id out of range");
    Vec logits(w_.rows);
    matvec(w_, c, logits);
    return logits[target] - detail::log_sum_exp(logits);
  }

  std::size_t trainable_param_count() const override { return w_.size(); }

  // Per example: V·m logit MACs + ~2V softmax + V·m for dc + m subtraction.
  std::uint64_t flop_count(std::size_t batch) const override {
    const std::uint64_t v = w_.rows, m = w_.cols;
    return static_cast<std::uint64_t>(batch) * (2 * v * m + 2 * v + m);
  }

  // One dense float32 dW per batch.
  std::uint64_t grad_payload_bytes(std::size_t) const override {
    return 4ull * w_.rows * w_.cols;
  }

  void apply_grad(const Vec& grad, double lr) override {
    if (grad.size() != w_.size()) throw ContractError("gradient size mismatch");
    for (std::size_t i = 0; i < grad.size(); ++i) w_.data[i] -= lr * grad[i];
  }

  std::string kind() const override { return "softmax"; }
  std::size_t dim() const override { return w_.cols; }
  std::size_t vocab_size() const override { return w_.rows; }

  Vec flat_params() const { return w_.data; }
  void set_flat_params(const Vec& p) {
    if (p.size() != w_.size()) throw ContractError("parameter size mismatch");
    w_.data = p;
  }

 private:
  DMat w_;
};

/// Softmax over {target} ∪ sampled negatives. Negatives are drawn once per
/// batch, without replacement, from a log-uniform proposal over word ids
/// (callers wanting the classical behaviour should order ids by descending
/// frequency). Each negative's logit is corrected by -log E(w) where E(w) is
/// its expected count in the drawn candidate set, E = 1-(1-Q)^tries — the
/// standard realization of proposal correction for unique sampling, which
/// keeps the mean sampled loss an accurate estimate of the full loss. The
/// always-included target needs no correction (E = 1). With n >= V the
/// layer falls back to full softmax with corrections disabled.
class SampledSoftmax final : public OutputLayer {
 public:
  SampledSoftmax(std::size_t v, std::size_t m, std::size_t negatives, std::uint64_t seed,
                 bool uniform_proposal = false)
      : w_(detail::seeded_rows(v, m, seed)),
        n_(negatives),
        uniform_q_(uniform_proposal),
        fallback_(negatives >= v) {
    if (negatives == 0) throw ContractError("sampled softmax needs >= 1 negative");
    if (fallback_) {
      negatives_.resize(v);
      for (std::size_t r = 0; r < v; ++r) negatives_[r] = {r, 0.0};
    }
  }

  /// Q(r) under the proposal: log-uniform (log(r+2)-log(r+1))/log(V+1), or
  /// flat 1/V in uniform mode.
  double proposal_q(std::size_t r) const {
    if (uniform_q_) return 1.0 / static_cast<double>(w_.rows);
    return (std::log(static_cast<double>(r) + 2.0) - std::log(static_cast<double>(r) + 1.0)) /
           std::log(static_cast<double>(w_.rows) + 1.0);
  }

  /// Draw this batch's negative sample (distinct ids). Inverse-CDF with
  /// rejection of duplicates; a deterministic fill completes the set in the
  /// stall-prone n ≈ V corner. Tracks the number of tries for the
  /// expected-count correction.
  void begin_batch(Rng& rng) {
    if (fallback_) return;
    std::set<std::size_t> picked;
    const double logv1 = std::log(static_cast<double>(w_.rows) + 1.0);
    std::size_t tries = 0;
    const std::size_t cap = 200 * n_ + 10'000;
    while (picked.size() < n_ && tries < cap) {
      ++tries;
      std::size_t r;
      if (uniform_q_) {
        r = static_cast<std::size_t>(rng.below(w_.rows));
      } else {
        r = static_cast<std::size_t>(std::exp(rng.uniform() * logv1)) - 1;
        if (r >= w_.rows) continue;  // boundary rounding
      }
      picked.insert(r);
    }
    for (std::size_t r = 0; picked.size() < n_; ++r) picked.insert(r);
    negatives_.clear();
    negatives_.reserve(n_);
    for (auto id : picked) {  // std::set iterates in ascending id order
      // log E = log(1 - (1-Q)^tries), computed via expm1/log1p for small Q.
      const double log_e = std::log(-std::expm1(static_cast<double>(tries) *
                                                std::log1p(-proposal_q(id))));
      negatives_.push_back({id, log_e});
    }
  }

  /// Test hook: fix the candidate set deterministically (expected count 1,
  /// so corrections vanish).
  void set_negatives(std::vector<std::size_t> ids) {
    for (auto r : ids)
      if (r >= w_.rows) throw ContractError("negative id out of range");
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    negatives_.clear();
    for (auto id : ids) negatives_.push_back({id, 0.0});
  }

  std::vector<std::size_t> negatives() const {
    std::vector<std::size_t> out;
    out.reserve(negatives_.size());
    for (const auto& n : negatives_) out.push_back(n.id);
    return out;
  }

  LossGrad loss_and_grad(std::span<const double> c, std::size_t target,
                         Vec* param_grad = nullptr) const override {
    if (target >= w_.rows) throw ContractError("target id out of range");
    if (c.size() != w_.cols) throw ContractError("context vector dimension mismatch");
    if (negatives_.empty()) throw ContractError("no negatives drawn: call begin_batch first");

    // Candidates in ascending id order: target merged in with correction 0;
    // a sampled negative equal to the target is dropped for this example.
    struct Cand {
      std::size_t id;
      double corr;
    };
    std::vector<Cand> cand;
    cand.reserve(negatives_.size() + 1);
    bool inserted = false;
    for (const auto& neg : negatives_) {
      if (!inserted && target <= neg.id) {
        cand.push_back({target, 0.0});
        inserted = true;
        if (target == neg.id) continue;
      }
      cand.push_back({neg.id, neg.log_expected});
    }
    if (!inserted) cand.push_back({target, 0.0});

    Vec logits(cand.size());
    std::size_t tpos = 0;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      logits[i] = dot(w_.row(cand[i].id), c) - cand[i].corr;
      if (cand[i].id == target) tpos = i;
    }
    const double lse = detail::log_sum_exp(logits);

    LossGrad out;
    out.loss = lse - logits[tpos];
    out.dc.assign(c.size(), 0.0);
    if (param_grad) param_grad->assign(w_.size(), 0.0);
    for (std::size_t i = 0; i < cand.size(); ++i) {
      const double coeff = std::exp(logits[i] - lse) - (i == tpos ? 1.0 : 0.0);
      axpy(coeff, w_.row(cand[i].id), out.dc);
      if (param_grad) {
        double* g = param_grad->data() + cand[i].id * w_.cols;
        for (std::size_t d = 0; d < w_.cols; ++d) g[d] += coeff * c[d];
      }
    }
    return out;
  }

  /// Exact model probability (full normalization, no proposal correction) —
  /// sampling is a training-time approximation, not a different model.
  std::optional<double> log_prob(std::span<const double> c, std::size_t target) const override {
    if (target >= w_.rows) throw ContractError("target id out of range");
    Vec logits(w_.rows);
    matvec(w_, c, logits);
    return logits[target] - detail::log_sum_exp(logits);
  }

  std::size_t trainable_param_count() const override { return w_.size(); }

  // Per example over k = n+1 candidates: k·m logits + k corrections +
  // 2k softmax + k·m for dc + m.
  std::uint64_t flop_count(std::size_t batch) const override {
    const std::uint64_t m = w_.cols;
    const std::uint64_t k = static_cast<std::uint64_t>(fallback_ ? w_.rows : n_ + 1);
    return static_cast<std::uint64_t>(batch) * (2 * k * m + 3 * k + m);
  }

  // Sparse update: n shared negative rows + one target row per example.
  std::uint64_t grad_payload_bytes(std::size_t batch) const override {
    if (fallback_) return 4ull * w_.rows * w_.cols;
    return 4ull * (n_ + batch) * w_.cols;
  }

  void apply_grad(const Vec& grad, double lr) override {
    if (grad.size() != w_.size()) throw ContractError("gradient size mismatch");
    for (std::size_t i = 0; i < grad.size(); ++i) w_.data[i] -= lr * grad[i];
  }

  std::string kind() const override { return "sampled"; }
  std::size_t dim() const override { return w_.cols; }
  std::size_t vocab_size() const override { return w_.rows; }
  bool fallback_active() const { return fallback_; }

  Vec flat_params() const { return w_.data; }
  void set_flat_params(const Vec& p) {
    if (p.size() != w_.size()) throw ContractError("parameter size mismatch");
    w_.data = p;
  }

 private:
  struct Negative {
    std::size_t id;
    double log_expected;  // log E[count in candidate set]; 0 when deterministic
  };

  DMat w_;
  std::size_t n_;
  bool uniform_q_;
  bool fallback_;
  std::vector<Negative> negatives_;
};

/// Two-level factorization: a head softmax over the most frequent words plus
/// one logit per tail cluster; each tail cluster scores its words in a
/// down-projected space. The induced distribution over the vocabulary is
/// exactly normalized.
struct AdaptiveConfig {
  std::vector<std::size_t> cutoffs;   // ascending frequency-rank boundaries, last = V
  std::vector<std::size_t> divisors;  // per-cluster m divisor; head (index 0) = 1
};

/// Head = top 20% of V capped at 20,000; remaining words split 80/20 into
/// two tail clusters with divisors 4 and 16. Tiny vocabularies collapse to
/// a single partition.
inline AdaptiveConfig default_adaptive_policy(std::size_t v) {
  if (v < 25) return {{v}, {1}};
  const std::size_t head = std::min<std::size_t>(v / 5, 20'000);
  const std::size_t rest = v - head;
  const std::size_t t1 = rest * 4 / 5;
  return {{head, head + t1, v}, {1, 4, 16}};
}

class AdaptiveSoftmax final : public OutputLayer {
 public:
  AdaptiveSoftmax(std::size_t m, const AdaptiveConfig& cfg, std::uint64_t seed) : m_(m) {
    validate(m, cfg);
    cutoffs_ = cfg.cutoffs;
    v_ = cutoffs_.back();
    const std::size_t tails = cutoffs_.size() - 1;
    head_ = detail::seeded_rows(cutoffs_[0] + tails, m, seed);
    for (std::size_t i = 1; i <= tails; ++i) {
      const std::size_t d = m / cfg.divisors[i];
      const std::size_t vi = cutoffs_[i] - cutoffs_[i - 1];
      proj_.push_back(detail::seeded_rows(d, m, seed + i));
      clusters_.push_back(detail::seeded_rows(vi, d, seed + 1000 + i));
    }
  }

  LossGrad loss_and_grad(std::span<const double> c, std::size_t target,
                         Vec* param_grad = nullptr) const override {
    if (target >= v_) throw ContractError("target id out of range");
    if (c.size() != m_) throw ContractError("context vector dimension mismatch");

    Vec head_logits(head_.rows);
    matvec(head_, c, head_logits);
    const double head_lse = detail::log_sum_exp(head_logits);

    LossGrad out;
    out.dc.assign(m_, 0.0);
    if (param_grad) param_grad->assign(trainable_param_count(), 0.0);

    // Which head slot the loss flows through.
    const std::size_t cluster = cluster_of(target);
    const std::size_t head_slot =
        cluster == 0 ? target : cutoffs_[0] + (cluster - 1);
    out.loss = head_lse - head_logits[head_slot];

    // Head backward.
    double* ghead = param_grad ? param_grad->data() : nullptr;
    for (std::size_t r = 0; r < head_.rows; ++r) {
      const double coeff = std::exp(head_logits[r] - head_lse) - (r == head_slot ? 1.0 : 0.0);
      axpy(coeff, head_.row(r), out.dc);
      if (ghead) {
        double* g = ghead + r * m_;
        for (std::size_t d = 0; d < m_; ++d) g[d] += coeff * c[d];
      }
    }

    if (cluster > 0) {
      const std::size_t i = cluster - 1;
      const std::size_t local = target - cutoffs_[cluster - 1];
      const DMat& p = proj_[i];
      const DMat& w = clusters_[i];
      Vec z(p.rows);
      matvec(p, c, z);
      Vec logits(w.rows);
      matvec(w, z, logits);
      const double lse = detail::log_sum_exp(logits);
      out.loss += lse - logits[local];

      Vec dz(p.rows, 0.0);
      double* gw = param_grad ? param_grad->data() + cluster_param_offset(i) + p.size() : nullptr;
      for (std::size_t r = 0; r < w.rows; ++r) {
        const double coeff = std::exp(logits[r] - lse) - (r == local ? 1.0 : 0.0);
        axpy(coeff, w.row(r), dz);
        if (gw) {
          double* g = gw + r * w.cols;
          for (std::size_t d = 0; d < w.cols; ++d) g[d] += coeff * z[d];
        }
      }
      // dc += P^T dz ; dP = dz outer c.
      for (std::size_t r = 0; r < p.rows; ++r) {
        axpy(dz[r], p.row(r), out.dc);
      }
      if (param_grad) {
        double* gp = param_grad->data() + cluster_param_offset(i);
        for (std::size_t r = 0; r < p.rows; ++r) {
          double* g = gp + r * m_;
          for (std::size_t d = 0; d < m_; ++d) g[d] += dz[r] * c[d];
        }
      }
    }
    return out;
  }

  std::optional<double> log_prob(std::span<const double> c, std::size_t target) const override {
    const LossGrad lg = loss_and_grad(c, target, nullptr);
    return -lg.loss;
  }

  std::size_t trainable_param_count() const override {
    std::size_t n = head_.size();
    for (std::size_t i = 0; i < proj_.size(); ++i) n += proj_[i].size() + clusters_[i].size();
    return n;
  }

  // Expected cost per example, target drawn uniformly from the vocabulary
  // (integer arithmetic for platform-independent determinism):
  //   head: 2(V0+T)m + 2(V0+T)    [logits + softmax + dc]
  //   tail i, weight Vi/V: 2 di m + 2 Vi di + 2 Vi  [proj + logits/dc + softmax]
  std::uint64_t flop_count(std::size_t batch) const override {
    const std::uint64_t hrows = head_.rows;
    std::uint64_t cost = 2 * hrows * m_ + 2 * hrows;
    std::uint64_t tail_weighted = 0;
    for (std::size_t i = 0; i < proj_.size(); ++i) {
      const std::uint64_t d = proj_[i].rows;
      const std::uint64_t vi = clusters_[i].rows;
      tail_weighted += vi * (2 * d * m_ + 2 * vi * d + 2 * vi);
    }
    cost += tail_weighted / v_;
    return static_cast<std::uint64_t>(batch) * cost;
  }

  // Dense float32 sync of every trainable block per batch.
  std::uint64_t grad_payload_bytes(std::size_t) const override {
    return 4ull * trainable_param_count();
  }

  void apply_grad(const Vec& grad, double lr) override {
    if (grad.size() != trainable_param_count()) throw ContractError("gradient size mismatch");
    std::size_t off = 0;
    auto apply = [&](DMat& mtx) {
      for (std::size_t i = 0; i < mtx.size(); ++i) mtx.data[i] -= lr * grad[off + i];
      off += mtx.size();
    };
    apply(head_);
    for (std::size_t i = 0; i < proj_.size(); ++i) {
      apply(proj_[i]);
      apply(clusters_[i]);
    }
  }

  std::string kind() const override { return "adaptive"; }
  std::size_t dim() const override { return m_; }
  std::size_t vocab_size() const override { return v_; }
  const std::vector<std::size_t>& cutoffs() const { return cutoffs_; }

  Vec flat_params() const {
    Vec out;
    out.reserve(trainable_param_count());
    out.insert(out.end(), head_.data.begin(), head_.data.end());
    for (std::size_t i = 0; i < proj_.size(); ++i) {
      out.insert(out.end(), proj_[i].data.begin(), proj_[i].data.end());
      out.insert(out.end(), clusters_[i].data.begin(), clusters_[i].data.end());
    }
    return out;
  }

  void set_flat_params(const Vec& p) {
    if (p.size() != trainable_param_count()) throw ContractError("parameter size mismatch");
    std::size_t off = 0;
    auto take = [&](DMat& mtx) {
      std::copy(p.begin() + off, p.begin() + off + mtx.size(), mtx.data.begin());
      off += mtx.size();
    };
    take(head_);
    for (std::size_t i = 0; i < proj_.size(); ++i) {
      take(proj_[i]);
      take(clusters_[i]);
    }
  }

 private:
  static void validate(std::size_t m, const AdaptiveConfig& cfg) {
    if (cfg.cutoffs.empty()) throw ContractError("adaptive: cutoffs must be nonempty");
    if (cfg.divisors.size() != cfg.cutoffs.size())
      throw ContractError("adaptive: one divisor per cluster required");
    for (std::size_t i = 1; i < cfg.cutoffs.size(); ++i)
      if (cfg.cutoffs[i] <= cfg.cutoffs[i - 1])
        throw ContractError("adaptive: cutoffs must be strictly ascending");
    if (cfg.divisors[0] != 1) throw ContractError("adaptive: head divisor must be 1");
    for (std::size_t i = 0; i < cfg.divisors.size(); ++i) {
      if (cfg.divisors[i] < 1) throw ContractError("adaptive: divisors must be >= 1");
      if (m / cfg.divisors[i] < 1)
        throw ContractError("adaptive: divisor exceeds model dimension");
    }
  }

  std::size_t cluster_of(std::size_t target) const {
    std::size_t i = 0;
    while (target >= cutoffs_[i]) ++i;
    return i;
  }

  std::size_t cluster_param_offset(std::size_t i) const {
    std::size_t off = head_.size();
    for (std::size_t j = 0; j < i; ++j) off += proj_[j].size() + clusters_[j].size();
    return off;
  }

  std::size_t m_;
  std::size_t v_ = 0;
  std::vector<std::size_t> cutoffs_;
  DMat head_;
  std::vector<DMat> proj_;
  std::vector<DMat> clusters_;
};

}  // namespace lmkit
