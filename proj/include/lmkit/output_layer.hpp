#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "lmkit/common.hpp"

namespace lmkit {

struct LossGrad {
  double loss = 0.0;
  Vec dc;  // gradient w.r.t. the context vector
};

/// Shared contract of the interchangeable loss heads.
///
/// Flop accounting convention (used by every implementation): one
/// multiply-accumulate = one flop. flop_count(batch) models the forward pass
/// plus the context gradient — exactly the work loss_and_grad does when
/// param_grad is null, which is what the benchmark times. Parameter-gradient
/// work is reported separately via grad_payload_bytes (bytes of trainable
/// gradient produced per batch).
class OutputLayer {
 public:
  virtual ~OutputLayer() = default;

  /// Loss and gradients for one example. When param_grad is non-null it is
  /// resized to trainable_param_count() and filled with the gradient w.r.t.
  /// the layer's flattened trainable parameters (empty for parameter-free
  /// layers).
  virtual LossGrad loss_and_grad(std::span<const double> c, std::size_t target,
                                 Vec* param_grad = nullptr) const = 0;

  virtual std::size_t trainable_param_count() const = 0;
  virtual std::uint64_t flop_count(std::size_t batch) const = 0;
  virtual std::uint64_t grad_payload_bytes(std::size_t batch) const = 0;

  /// params -= lr * grad (grad laid out as in loss_and_grad's param_grad).
  virtual void apply_grad(const Vec& grad, double lr) = 0;

  /// Flattened trainable parameters, in apply_grad order. Parameter-free
  /// layers return empty and accept only empty (checkpoint round trips).
  virtual Vec flat_params() const { return {}; }
  virtual void set_flat_params(const Vec& p) {
    if (!p.empty())
      throw ContractError(kind() + " has no trainable parameters to restore");
  }

  /// log p(target | c) for heads that define a normalized distribution;
  /// nullopt for distance-based heads (perplexity is undefined there).
  virtual std::optional<double> log_prob(std::span<const double> c,
                                         std::size_t target) const {
    (void)c;
    (void)target;
    return std::nullopt;
  }

  virtual std::string kind() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::size_t vocab_size() const = 0;
};

}  // namespace lmkit
