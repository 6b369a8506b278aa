#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lmkit/common.hpp"
#include "lmkit/semfit_layers.hpp"
#include "lmkit/softmax_layers.hpp"

namespace lmkit {

/// Config-level description of an output layer. `kind` selects the family;
/// the remaining fields apply where relevant and are ignored elsewhere.
struct OutputSpec {
  std::string kind = "softmax";     // softmax | sampled | adaptive | semfit
  std::string distance = "cosine";  // semfit only: l2 | cosine | nllvmf
  std::size_t v = 0;
  std::size_t m = 0;
  std::uint64_t seed = 1;
  std::size_t negatives = 64;              // sampled only
  double lambda1 = 0.02, lambda2 = 1.0;    // nllvmf only
  std::vector<std::size_t> cutoffs;        // adaptive; empty = default policy
  std::vector<std::size_t> divisors;       // adaptive; empty = default policy

  bool wants_normalized_targets() const { return distance != "l2"; }
};

/// Build the layer described by `spec`. SemFit layers use `targets` when
/// given (embedding-derived tables) and otherwise fall back to a seeded
/// random unit table, which is what benchmarks want.
inline std::unique_ptr<OutputLayer> make_output_layer(const OutputSpec& spec,
                                                      const TargetTable* targets = nullptr) {
  if (spec.v == 0 || spec.m == 0) throw UsageError("output layer needs V >= 1 and m >= 1");
  if (spec.kind == "softmax") {
    return std::make_unique<FullSoftmax>(spec.v, spec.m, spec.seed);
  }
  if (spec.kind == "sampled") {
    return std::make_unique<SampledSoftmax>(spec.v, spec.m, spec.negatives, spec.seed);
  }
  if (spec.kind == "adaptive") {
    AdaptiveConfig cfg;
    if (spec.cutoffs.empty()) {
      cfg = default_adaptive_policy(spec.v);
    } else {
      cfg.cutoffs = spec.cutoffs;
      cfg.divisors = spec.divisors;
    }
    return std::make_unique<AdaptiveSoftmax>(spec.m, cfg, spec.seed);
  }
  if (spec.kind == "semfit") {
    TargetTable table =
        targets ? *targets : TargetTable::random(spec.v, spec.m, spec.seed);
    if (spec.distance == "l2") return std::make_unique<SemFitL2>(std::move(table));
    if (spec.distance == "cosine") return std::make_unique<SemFitCosine>(std::move(table));
    if (spec.distance == "nllvmf")
      return std::make_unique<SemFitNllvmf>(std::move(table), spec.lambda1, spec.lambda2);
    throw UsageError("unknown semfit distance \"" + spec.distance +
                     "\" (expected l2, cosine, or nllvmf)");
  }
  throw UsageError("unknown output layer kind \"" + spec.kind +
                   "\" (expected softmax, sampled, adaptive, or semfit)");
}

}  // namespace lmkit
