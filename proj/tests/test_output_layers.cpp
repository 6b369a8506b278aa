#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <vector>

#include "lmkit/semfit_layers.hpp"
#include "lmkit/softmax_layers.hpp"
#include "oracles.hpp"

using namespace lmkit;

namespace {

Vec random_vec(std::size_t m, Rng& rng, double scale = 1.0) {
  Vec v(m);
  for (auto& x : v) x = scale * rng.gaussian();
  return v;
}

Vec scaled_to_norm(Vec v, double target_norm) {
  const double n = norm(v);
  for (auto& x : v) x *= target_norm / n;
  return v;
}

// FD of loss w.r.t. c for any layer, via the oracle's central differences.
Vec fd_dc(const OutputLayer& layer, const Vec& c, std::size_t target, double h = 1e-5) {
  return oracle::fd_gradient(
      [&](const std::vector<double>& x) { return layer.loss_and_grad(x, target).loss; }, c, h);
}

}  // namespace

// ---------------------------------------------------------------------------
// Full softmax

TEST_CASE("full softmax: equal logits give the uniform loss ln V", "[output][softmax]") {
  // c = 0 makes every logit zero regardless of W.
  FullSoftmax layer(4, 6, /*seed=*/1);
  const Vec c(6, 0.0);
  const auto lg = layer.loss_and_grad(c, 2);
  REQUIRE(lg.loss == Catch::Approx(std::log(4.0)).epsilon(1e-12));
  REQUIRE(*layer.log_prob(c, 2) == Catch::Approx(-std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("full softmax: wide two-word margin", "[output][softmax]") {
  // V=2, m=1, logits (+10, -10) for c=[1].
  FullSoftmax layer(DMat(2, 1, 0.0));
  layer.set_flat_params({10.0, -10.0});
  const auto lg = layer.loss_and_grad(Vec{1.0}, 0);
  // Oracle: direct stable evaluation log(1 + e^-20). The layer's
  // max-subtracted log-sum-exp rounds against the max logit, so agreement
  // holds to a few ulps of 10, not of the tiny loss itself.
  REQUIRE(lg.loss == Catch::Approx(std::log1p(std::exp(-20.0))).margin(1e-14));
  REQUIRE(lg.loss == Catch::Approx(2.0611536203143807e-9).margin(1e-14));
}

TEST_CASE("full softmax: dc and dW match finite differences", "[output][softmax]") {
  const std::size_t v = 50, m = 10;
  FullSoftmax layer(v, m, /*seed=*/42);
  Rng rng(7);
  const Vec c = random_vec(m, rng);

  Vec dw;
  const auto lg = layer.loss_and_grad(c, 13, &dw);

  const Vec fd_c = fd_dc(layer, c, 13);
  REQUIRE(oracle::rel_grad_err(lg.dc, fd_c) < 1e-4);

  // Wiggle each of the v*m weights through set_flat_params.
  FullSoftmax probe = layer;
  const Vec fd_w = oracle::fd_gradient(
      [&](const std::vector<double>& p) {
        probe.set_flat_params(p);
        return probe.loss_and_grad(c, 13).loss;
      },
      layer.flat_params(), 1e-5);
  REQUIRE(dw.size() == v * m);
  REQUIRE(oracle::rel_grad_err(dw, fd_w) < 1e-4);
}

TEST_CASE("full softmax: induced distribution sums to one", "[output][softmax]") {
  const std::size_t v = 1000, m = 16;
  FullSoftmax layer(v, m, /*seed=*/3);
  Rng rng(9);
  const Vec c = random_vec(m, rng);
  double total = 0.0;
  for (std::size_t t = 0; t < v; ++t) total += std::exp(*layer.log_prob(c, t));
  REQUIRE(total == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("full softmax: one SGD step on dW reduces the loss", "[output][softmax]") {
  FullSoftmax layer(20, 8, /*seed=*/5);
  Rng rng(6);
  const Vec c = random_vec(8, rng);
  Vec dw;
  const double before = layer.loss_and_grad(c, 4, &dw).loss;
  layer.apply_grad(dw, 0.1);
  REQUIRE(layer.loss_and_grad(c, 4).loss < before);
}

TEST_CASE("full softmax: preconditions", "[output][softmax]") {
  FullSoftmax layer(10, 4, 1);
  REQUIRE_THROWS_AS(layer.loss_and_grad(Vec(4, 0.0), 10), ContractError);
  REQUIRE_THROWS_AS(layer.loss_and_grad(Vec(5, 0.0), 0), ContractError);
  REQUIRE_THROWS_AS(layer.apply_grad(Vec(3, 0.0), 0.1), ContractError);
}

// ---------------------------------------------------------------------------
// Sampled softmax

TEST_CASE("sampled softmax: full candidate set reproduces full softmax exactly",
          "[output][sampled]") {
  const std::size_t v = 30, m = 8;
  // Same seed => identical weight rows in both layers.
  FullSoftmax full(v, m, /*seed=*/77);
  SampledSoftmax sampled(v, m, /*negatives=*/v - 1, /*seed=*/77);

  std::vector<std::size_t> everyone(v);
  std::iota(everyone.begin(), everyone.end(), std::size_t{0});
  sampled.set_negatives(everyone);  // deterministic set: corrections vanish

  Rng rng(123);
  for (std::size_t target : {std::size_t{0}, std::size_t{11}, std::size_t{29}}) {
    const Vec c = random_vec(m, rng);
    const auto a = full.loss_and_grad(c, target);
    const auto b = sampled.loss_and_grad(c, target);
    REQUIRE(b.loss == a.loss);  // bit-exact: same logits in the same order
    REQUIRE(oracle::max_abs_diff(a.dc, b.dc) == 0.0);
  }
}

TEST_CASE("sampled softmax: n >= V falls back to full softmax", "[output][sampled]") {
  const std::size_t v = 12, m = 5;
  FullSoftmax full(v, m, /*seed=*/21);
  SampledSoftmax sampled(v, m, /*negatives=*/v + 3, /*seed=*/21);
  REQUIRE(sampled.fallback_active());

  Rng rng(4);
  const Vec c = random_vec(m, rng);
  // No begin_batch needed in fallback mode.
  REQUIRE(sampled.loss_and_grad(c, 7).loss == full.loss_and_grad(c, 7).loss);
  REQUIRE(sampled.grad_payload_bytes(16) == full.grad_payload_bytes(16));
}

TEST_CASE("sampled softmax: a hopeless negative leaves vanishing loss", "[output][sampled]") {
  // V=2, m=1: target logit +5, the single negative at -60 (stand-in for -inf).
  SampledSoftmax layer(2, 1, /*negatives=*/1, /*seed=*/1);
  layer.set_flat_params({5.0, -60.0});
  layer.set_negatives({1});
  const auto lg = layer.loss_and_grad(Vec{1.0}, 0);
  REQUIRE(lg.loss >= 0.0);
  REQUIRE(lg.loss < 1e-12);
}

TEST_CASE("sampled softmax: mean sampled loss tracks the full loss", "[output][sampled]") {
  // Fixed instance; Monte-Carlo over resampled negative sets.
  const std::size_t v = 100, m = 8, n = 20;
  FullSoftmax full(v, m, /*seed=*/7);
  SampledSoftmax sampled(v, m, n, /*seed=*/7);
  Rng crng(11);
  const Vec c = random_vec(m, crng);

  Rng srng(2024);
  for (std::size_t target : {std::size_t{0}, std::size_t{10}, std::size_t{50}, std::size_t{99}}) {
    const double exact = full.loss_and_grad(c, target).loss;
    double mean = 0.0;
    const int reps = 10'000;
    for (int r = 0; r < reps; ++r) {
      sampled.begin_batch(srng);
      mean += sampled.loss_and_grad(c, target).loss;
    }
    mean /= reps;
    REQUIRE(std::abs(mean - exact) / exact < 0.05);
  }
}

TEST_CASE("sampled softmax: gradient touches only candidate rows", "[output][sampled]") {
  const std::size_t v = 40, m = 6, n = 5;
  SampledSoftmax layer(v, m, n, /*seed=*/31);
  Rng rng(15);
  layer.begin_batch(rng);
  const Vec c = random_vec(m, rng);
  const std::size_t target = 33;

  Vec dw;
  layer.loss_and_grad(c, target, &dw);
  REQUIRE(dw.size() == v * m);

  const auto negs = layer.negatives();
  std::set<std::size_t> cand(negs.begin(), negs.end());
  cand.insert(target);
  for (std::size_t r = 0; r < v; ++r) {
    double row_norm = 0.0;
    for (std::size_t d = 0; d < m; ++d) row_norm += std::abs(dw[r * m + d]);
    if (cand.count(r)) {
      REQUIRE(row_norm > 0.0);
    } else {
      REQUIRE(row_norm == 0.0);
    }
  }

  // The fixed candidate set makes the loss deterministic in c: FD applies.
  const auto lg = layer.loss_and_grad(c, target);
  REQUIRE(oracle::rel_grad_err(lg.dc, fd_dc(layer, c, target)) < 1e-4);
}

TEST_CASE("sampled softmax: log_prob is exactly normalized", "[output][sampled]") {
  const std::size_t v = 100, m = 8;
  SampledSoftmax layer(v, m, 20, /*seed=*/7);
  Rng rng(11);
  const Vec c = random_vec(m, rng);
  double total = 0.0;
  for (std::size_t t = 0; t < v; ++t) total += std::exp(*layer.log_prob(c, t));
  REQUIRE(total == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("sampled softmax: preconditions", "[output][sampled]") {
  REQUIRE_THROWS_AS(SampledSoftmax(10, 4, 0, 1), ContractError);
  SampledSoftmax layer(10, 4, 3, 1);
  REQUIRE_THROWS_AS(layer.loss_and_grad(Vec(4, 0.0), 2), ContractError);  // no batch drawn
  REQUIRE_THROWS_AS(layer.set_negatives({10}), ContractError);
  layer.set_negatives({1, 2, 3});
  REQUIRE_THROWS_AS(layer.loss_and_grad(Vec(4, 0.0), 10), ContractError);
  REQUIRE_THROWS_AS(layer.loss_and_grad(Vec(3, 0.0), 2), ContractError);
}

// ---------------------------------------------------------------------------
// Adaptive softmax

TEST_CASE("adaptive softmax: single partition reproduces full softmax", "[output][adaptive]") {
  const std::size_t v = 20, m = 8;
  REQUIRE(default_adaptive_policy(v).cutoffs == std::vector<std::size_t>{v});

  FullSoftmax full(v, m, /*seed=*/55);
  AdaptiveSoftmax adaptive(m, default_adaptive_policy(v), /*seed=*/55);
  REQUIRE(adaptive.trainable_param_count() == v * m);

  Rng rng(8);
  for (std::size_t target : {std::size_t{0}, std::size_t{9}, std::size_t{19}}) {
    const Vec c = random_vec(m, rng);
    const double a = full.loss_and_grad(c, target).loss;
    const double b = adaptive.loss_and_grad(c, target).loss;
    REQUIRE(b == Catch::Approx(a).margin(1e-9));
  }
}

TEST_CASE("adaptive softmax: induced distribution sums to one", "[output][adaptive]") {
  Rng rng(19);
  for (std::size_t v : {std::size_t{137}, std::size_t{1000}}) {
    const std::size_t m = 16;
    AdaptiveSoftmax layer(m, default_adaptive_policy(v), /*seed=*/v);
    const Vec c = random_vec(m, rng);
    double total = 0.0;
    for (std::size_t t = 0; t < v; ++t) total += std::exp(*layer.log_prob(c, t));
    REQUIRE(total == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("adaptive softmax: parameter count matches hand arithmetic", "[output][adaptive]") {
  // head (2000+2)x2048, tail1 512x2048 + 8000x512, tail2 128x2048 + 30000x128:
  // 4100096 + 1048576 + 4096000 + 262144 + 3840000 = 13346816.
  AdaptiveSoftmax big(2048, {{2000, 10000, 40000}, {1, 4, 16}}, /*seed=*/1);
  REQUIRE(big.trainable_param_count() == 13'346'816);

  // Default policy at V=40000, m=300: head (8000+2)x300, tail1 75x300 +
  // 25600x75, tail2 18x300 + 6400x18 = 2400600 + 1942500 + 120600.
  AdaptiveSoftmax def(300, default_adaptive_policy(40'000), /*seed=*/1);
  REQUIRE(def.cutoffs() == std::vector<std::size_t>{8'000, 33'600, 40'000});
  REQUIRE(def.trainable_param_count() == 4'463'700);
}

TEST_CASE("adaptive softmax: dc and parameter grads match finite differences",
          "[output][adaptive]") {
  const std::size_t m = 12;
  AdaptiveSoftmax layer(m, {{10, 30, 60}, {1, 2, 4}}, /*seed=*/14);
  Rng rng(3);

  // One target per region: head word, first tail, second tail.
  for (std::size_t target : {std::size_t{4}, std::size_t{17}, std::size_t{45}}) {
    const Vec c = random_vec(m, rng);
    Vec dparams;
    const auto lg = layer.loss_and_grad(c, target, &dparams);

    REQUIRE(oracle::rel_grad_err(lg.dc, fd_dc(layer, c, target)) < 1e-4);

    AdaptiveSoftmax probe = layer;
    const Vec fd_p = oracle::fd_gradient(
        [&](const std::vector<double>& p) {
          probe.set_flat_params(p);
          return probe.loss_and_grad(c, target).loss;
        },
        layer.flat_params(), 1e-5);
    REQUIRE(dparams.size() == layer.trainable_param_count());
    REQUIRE(oracle::rel_grad_err(dparams, fd_p) < 1e-4);
  }
}

TEST_CASE("adaptive softmax: config validation", "[output][adaptive]") {
  REQUIRE_THROWS_AS(AdaptiveSoftmax(8, {{}, {}}, 1), ContractError);
  REQUIRE_THROWS_AS(AdaptiveSoftmax(8, {{10, 5, 20}, {1, 4, 16}}, 1), ContractError);
  REQUIRE_THROWS_AS(AdaptiveSoftmax(8, {{10, 20}, {1}}, 1), ContractError);
  REQUIRE_THROWS_AS(AdaptiveSoftmax(8, {{10, 20}, {2, 4}}, 1), ContractError);
  REQUIRE_THROWS_AS(AdaptiveSoftmax(8, {{10, 20}, {1, 0}}, 1), ContractError);
  REQUIRE_THROWS_AS(AdaptiveSoftmax(4, {{10, 20}, {1, 16}}, 1), ContractError);  // m/16 = 0

  AdaptiveSoftmax ok(8, {{10, 20}, {1, 4}}, 1);
  REQUIRE_THROWS_AS(ok.loss_and_grad(Vec(8, 0.0), 20), ContractError);
}

// ---------------------------------------------------------------------------
// SemFit layers

TEST_CASE("semfit L2: closed-form cases and finite differences", "[output][semfit]") {
  const std::size_t m = 16;
  TargetTable t = TargetTable::random(5, m, /*seed=*/2);
  SemFitL2 layer(t);

  // c = w  =>  loss 0, dc 0.
  Vec w(m);
  for (std::size_t d = 0; d < m; ++d) w[d] = static_cast<double>(t.rows[3][d]);
  auto lg = layer.loss_and_grad(w, 3);
  REQUIRE(lg.loss == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(norm(lg.dc) == Catch::Approx(0.0).margin(1e-12));

  // c = 0 against a unit basis target  =>  loss 1, dc = -2w.
  TargetTable basis;
  basis.rows = FMat(1, m, 0.0f);
  basis.rows[0][0] = 1.0f;
  SemFitL2 unit(basis);
  lg = unit.loss_and_grad(Vec(m, 0.0), 0);
  REQUIRE(lg.loss == Catch::Approx(1.0).epsilon(1e-12));
  REQUIRE(lg.dc[0] == Catch::Approx(-2.0).epsilon(1e-12));
  for (std::size_t d = 1; d < m; ++d) REQUIRE(lg.dc[d] == 0.0);

  // Random pair: FD within 1e-6 (quadratic loss, centered differences).
  Rng rng(77);
  const Vec c = random_vec(m, rng);
  lg = layer.loss_and_grad(c, 1);
  REQUIRE(oracle::rel_grad_err(lg.dc, fd_dc(layer, c, 1, 1e-6)) < 1e-6);
}

TEST_CASE("semfit cosine: alignment, orthogonality, scale invariance", "[output][semfit]") {
  const std::size_t m = 8;
  TargetTable t = TargetTable::random(3, m, /*seed=*/4);
  SemFitCosine layer(t);

  Vec w(m);
  for (std::size_t d = 0; d < m; ++d) w[d] = static_cast<double>(t.rows[0][d]);

  // Parallel: loss -1, dc 0.
  Vec c = w;
  for (auto& x : c) x *= 3.5;
  auto lg = layer.loss_and_grad(c, 0);
  REQUIRE(lg.loss == Catch::Approx(-1.0).margin(1e-6));
  REQUIRE(norm(lg.dc) == Catch::Approx(0.0).margin(1e-6));

  // Orthogonal: loss 0. Build c ⟂ w by Gram-Schmidt.
  Rng rng(9);
  Vec q = random_vec(m, rng);
  const double qw = dot(q, w);
  for (std::size_t d = 0; d < m; ++d) q[d] -= qw * w[d];
  lg = layer.loss_and_grad(q, 0);
  REQUIRE(lg.loss == Catch::Approx(0.0).margin(1e-6));

  // Scale invariance at alpha = 7.3.
  const Vec c2 = random_vec(m, rng);
  Vec c2s = c2;
  for (auto& x : c2s) x *= 7.3;
  REQUIRE(layer.loss_and_grad(c2, 1).loss ==
          Catch::Approx(layer.loss_and_grad(c2s, 1).loss).epsilon(1e-12));

  // FD on a generic point.
  lg = layer.loss_and_grad(c2, 2);
  REQUIRE(oracle::rel_grad_err(lg.dc, fd_dc(layer, c2, 2)) < 1e-4);

  // Degenerate context vector.
  REQUIRE_THROWS_MATCHES(layer.loss_and_grad(Vec(m, 0.0), 0), NumericError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("degenerate context vector")));
}

TEST_CASE("semfit NLLvMF: gradient direction, asymptotics, finite differences",
          "[output][semfit]") {
  const std::size_t m = 16;
  TargetTable t = TargetTable::random(4, m, /*seed=*/12);
  Rng rng(21);

  SECTION("lambda1 = lambda2 = 0 leaves dc parallel to c") {
    SemFitNllvmf layer(t, 0.0, 0.0);
    const Vec c = random_vec(m, rng);
    const auto lg = layer.loss_and_grad(c, 2);
    REQUIRE(cosine(lg.dc, c) == Catch::Approx(1.0).margin(1e-10));
    // Magnitude is exactly the Bessel ratio at |c|.
    REQUIRE(norm(lg.dc) ==
            Catch::Approx(bessel_ratio(static_cast<double>(m) / 2.0 - 1.0, norm(c)))
                .epsilon(1e-12));
  }

  SECTION("concentration ratio approaches one") {
    // R_64(1e4) = I_32/I_31 at k=1e4.
    const double r = bessel_ratio(31.0, 1e4);
    REQUIRE(r > 0.99);
    REQUIRE(r < 1.0);
  }

  SECTION("finite differences across lambda settings and Bessel branches") {
    struct Case {
      double l1, l2, target_norm;
      std::size_t m;
    };
    // Norms 2.5 / 25 / 40 steer log I through the series, large-argument and
    // large-order branches respectively.
    for (const Case& k : {Case{0.02, 1.0, 2.5, 16}, Case{0.0, 0.0, 2.5, 16},
                          Case{0.5, 2.0, 2.5, 16}, Case{0.02, 1.0, 25.0, 16},
                          Case{0.02, 1.0, 40.0, 64}}) {
      TargetTable tt = TargetTable::random(3, k.m, /*seed=*/31);
      SemFitNllvmf layer(tt, k.l1, k.l2);
      const Vec c = scaled_to_norm(random_vec(k.m, rng), k.target_norm);
      const auto lg = layer.loss_and_grad(c, 1);
      REQUIRE(oracle::rel_grad_err(lg.dc, fd_dc(layer, c, 1)) < 1e-4);
    }
  }

  SECTION("negative lambdas are rejected") {
    REQUIRE_THROWS_AS(SemFitNllvmf(t, -0.1, 1.0), ContractError);
    REQUIRE_THROWS_AS(SemFitNllvmf(t, 0.1, -1.0), ContractError);
  }
}

TEST_CASE("semfit: no trainable parameters anywhere", "[output][semfit]") {
  const std::size_t m = 8;
  TargetTable t = TargetTable::random(6, m, /*seed=*/3);
  std::vector<std::unique_ptr<OutputLayer>> layers;
  layers.push_back(std::make_unique<SemFitL2>(t));
  layers.push_back(std::make_unique<SemFitCosine>(t));
  layers.push_back(std::make_unique<SemFitNllvmf>(t, 0.02, 1.0));

  Rng rng(13);
  const Vec c = random_vec(m, rng);
  for (const auto& layer : layers) {
    REQUIRE(layer->trainable_param_count() == 0);
    REQUIRE(layer->grad_payload_bytes(128) == 0);
    Vec param_grad{1.0, 2.0};  // stale content must be cleared
    layer->loss_and_grad(c, 0, &param_grad);
    REQUIRE(param_grad.empty());
    REQUIRE_NOTHROW(layer->apply_grad({}, 0.1));
    REQUIRE_THROWS_AS(layer->apply_grad(Vec{0.5}, 0.1), ContractError);
    REQUIRE_FALSE(layer->log_prob(c, 0).has_value());
  }
}

TEST_CASE("semfit: target table construction", "[output][semfit]") {
  EmbeddingTable table;
  table.m = 4;
  table.buckets = FMat(1, 4, 0.0f);
  table.set_vocab({"ok", "zero"});
  table.words = FMat(2, 4, 0.0f);
  table.words[0][0] = 3.0f;
  table.words[0][1] = 4.0f;

  // Normalized rows come out unit length.
  TargetTable t = TargetTable::from_embeddings(table, {"ok"}, /*normalize=*/true);
  REQUIRE(t.rows[0][0] == Catch::Approx(0.6).epsilon(1e-6));
  REQUIRE(t.rows[0][1] == Catch::Approx(0.8).epsilon(1e-6));

  // A zero embedding cannot be normalized.
  REQUIRE_THROWS_AS(TargetTable::from_embeddings(table, {"zero"}, true), NumericError);
  REQUIRE_NOTHROW(TargetTable::from_embeddings(table, {"zero"}, false));
}

// ---------------------------------------------------------------------------
// Cross-layer contract

TEST_CASE("contract: dc matches finite differences on random instances", "[output][contract]") {
  const std::size_t v = 30, m = 8;
  TargetTable t = TargetTable::random(v, m, /*seed=*/6);

  std::vector<std::unique_ptr<OutputLayer>> layers;
  layers.push_back(std::make_unique<FullSoftmax>(v, m, 101));
  layers.push_back(std::make_unique<AdaptiveSoftmax>(
      m, AdaptiveConfig{{5, 18, 30}, {1, 2, 4}}, 102));
  layers.push_back(std::make_unique<SemFitL2>(t));
  layers.push_back(std::make_unique<SemFitCosine>(t));
  layers.push_back(std::make_unique<SemFitNllvmf>(t, 0.02, 1.0));
  auto sampled = std::make_unique<SampledSoftmax>(v, m, 6, 103);

  Rng rng(1000);
  for (int inst = 0; inst < 100; ++inst) {
    const Vec c = random_vec(m, rng);
    const auto target = static_cast<std::size_t>(rng.below(v));
    for (const auto& layer : layers) {
      const auto lg = layer->loss_and_grad(c, target);
      REQUIRE(std::isfinite(lg.loss));
      INFO(layer->kind() << " instance " << inst);
      REQUIRE(oracle::rel_grad_err(lg.dc, fd_dc(*layer, c, target)) < 1e-4);
    }
    sampled->begin_batch(rng);  // new negative set per instance; fixed during FD
    const auto lg = sampled->loss_and_grad(c, target);
    INFO("sampled instance " << inst);
    REQUIRE(oracle::rel_grad_err(lg.dc, fd_dc(*sampled, c, target)) < 1e-4);
  }
}

TEST_CASE("contract: flop counts scale as documented", "[output][contract]") {
  const std::size_t m = 8;

  // SemFit cost is a function of (batch, m) only.
  SemFitL2 small(TargetTable::random(1'000, m, 1));
  SemFitL2 large(TargetTable::random(1'000'000, m, 1));
  REQUIRE(small.flop_count(32) == large.flop_count(32));
  REQUIRE(small.flop_count(32) == 32 * (3 * m + 8));
  SemFitCosine cos_layer(TargetTable::random(1'000, m, 1));
  REQUIRE(cos_layer.flop_count(32) == small.flop_count(32));

  // Full softmax grows linearly in V.
  FullSoftmax f4(10'000, 4, 1);
  FullSoftmax f5(100'000, 4, 1);
  REQUIRE(f4.flop_count(3) == 3 * (2 * 10'000 * 4 + 2 * 10'000 + 4));
  const double linear_ratio = static_cast<double>(f5.flop_count(1)) / f4.flop_count(1);
  REQUIRE(linear_ratio > 9.99);
  REQUIRE(linear_ratio < 10.01);

  // Adaptive grows sub-linearly under the default policy: a 100x vocabulary
  // only costs ~61x. Frozen values from the integer cost model.
  AdaptiveSoftmax a4(32, default_adaptive_policy(10'000), 1);
  AdaptiveSoftmax a6(32, default_adaptive_policy(1'000'000), 1);
  REQUIRE(a4.flop_count(1) == 207'744);
  REQUIRE(a6.flop_count(1) == 12'614'862);
  const double adaptive_ratio = static_cast<double>(a6.flop_count(1)) / a4.flop_count(1);
  REQUIRE(adaptive_ratio < std::pow(100.0, 0.9));

  // Sampled cost depends on the sample size, not V.
  SampledSoftmax s(100, m, 20, 1);
  REQUIRE(s.flop_count(2) == 2 * (2 * 21 * m + 3 * 21 + m));
}

TEST_CASE("contract: gradient payload accounting", "[output][contract]") {
  const std::size_t v = 50, m = 8;
  FullSoftmax full(v, m, 1);
  REQUIRE(full.grad_payload_bytes(64) == 4ull * v * m);

  SampledSoftmax sampled(v, m, 10, 1);
  REQUIRE(sampled.grad_payload_bytes(64) == 4ull * (10 + 64) * m);

  AdaptiveSoftmax adaptive(m, AdaptiveConfig{{10, 30, 50}, {1, 2, 4}}, 1);
  REQUIRE(adaptive.grad_payload_bytes(64) == 4ull * adaptive.trainable_param_count());

  SemFitL2 semfit(TargetTable::random(v, m, 1));
  REQUIRE(semfit.grad_payload_bytes(64) == 0);
}

TEST_CASE("contract: layer kinds", "[output][contract]") {
  const std::size_t v = 10, m = 4;
  TargetTable t = TargetTable::random(v, m, 1);
  REQUIRE(FullSoftmax(v, m, 1).kind() == "softmax");
  REQUIRE(SampledSoftmax(v, m, 3, 1).kind() == "sampled");
  REQUIRE(AdaptiveSoftmax(m, default_adaptive_policy(v), 1).kind() == "adaptive");
  REQUIRE(SemFitL2(t).kind() == "semfit_l2");
  REQUIRE(SemFitCosine(t).kind() == "semfit_cosine");
  REQUIRE(SemFitNllvmf(t, 0.02, 1.0).kind() == "semfit_nllvmf");
}
