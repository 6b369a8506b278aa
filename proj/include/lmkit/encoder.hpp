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

namespace lmkit {

/// Fixed-window feedforward context encoder:
///   c = P_out · LN(tanh(P_in · concat(embeddings) + b))
/// Exactly differentiated by hand; the input embeddings are fixed and never
/// receive gradient. An LSTM could slot in behind the same
/// encode/backward contract, but a window net keeps the gradient oracles
/// tractable.

struct EncoderDims {
  std::size_t k = 0;     // context window length (tokens)
  std::size_t m_in = 0;  // input embedding dimension
  std::size_t h = 0;     // hidden units
  std::size_t m = 0;     // output (context vector) dimension

  std::size_t input_width() const { return k * m_in; }
  bool valid() const { return k > 0 && m_in > 0 && h > 0 && m > 0; }
};

struct EncoderParams {
  EncoderDims dims;
  DMat p_in;   // h x (k*m_in)
  Vec b;       // h
  DMat p_out;  // m x h
  Vec gain;    // h (layer-norm)
  Vec bias;    // h (layer-norm)

  std::size_t param_count() const {
    return p_in.size() + b.size() + p_out.size() + gain.size() + bias.size();
  }

  Vec flat() const {
    Vec out;
    out.reserve(param_count());
    out.insert(out.end(), p_in.data.begin(), p_in.data.end());
    out.insert(out.end(), b.begin(), b.end());
    out.insert(out.end(), p_out.data.begin(), p_out.data.end());
    out.insert(out.end(), gain.begin(), gain.end());
    out.insert(out.end(), bias.begin(), bias.end());
    return out;
  }

  void set_flat(const Vec& p) {
    if (p.size() != param_count()) throw ContractError("encoder parameter size mismatch");
    auto it = p.begin();
    auto take = [&](auto dst, std::size_t n) {
      std::copy(it, it + static_cast<std::ptrdiff_t>(n), dst);
      it += static_cast<std::ptrdiff_t>(n);
    };
    take(p_in.data.begin(), p_in.size());
    take(b.begin(), b.size());
    take(p_out.data.begin(), p_out.size());
    take(gain.begin(), gain.size());
    take(bias.begin(), bias.size());
  }
};

/// Gradients in the same shapes as the parameters; accumulated across a
/// batch with operator-style add in encoder_backward.
struct EncoderGrads {
  DMat p_in;
  Vec b;
  DMat p_out;
  Vec gain;
  Vec bias;

  static EncoderGrads zeros(const EncoderDims& d) {
    EncoderGrads g;
    g.p_in = DMat(d.h, d.input_width(), 0.0);
    g.b.assign(d.h, 0.0);
    g.p_out = DMat(d.m, d.h, 0.0);
    g.gain.assign(d.h, 0.0);
    g.bias.assign(d.h, 0.0);
    return g;
  }

  void clear() {
    p_in.data.assign(p_in.data.size(), 0.0);
    b.assign(b.size(), 0.0);
    p_out.data.assign(p_out.data.size(), 0.0);
    gain.assign(gain.size(), 0.0);
    bias.assign(bias.size(), 0.0);
  }

  Vec flat() const {
    Vec out;
    out.insert(out.end(), p_in.data.begin(), p_in.data.end());
    out.insert(out.end(), b.begin(), b.end());
    out.insert(out.end(), p_out.data.begin(), p_out.data.end());
    out.insert(out.end(), gain.begin(), gain.end());
    out.insert(out.end(), bias.begin(), bias.end());
    return out;
  }
};

/// Glorot-uniform projections (±sqrt(6/(fan_in+fan_out))), zero biases,
/// identity layer norm. Deterministic per seed.
inline EncoderParams init_params(std::uint64_t seed, const EncoderDims& dims) {
  if (!dims.valid()) throw ContractError("encoder dims must all be positive");
  EncoderParams p;
  p.dims = dims;
  Rng rng(seed);
  const double lim_in =
      std::sqrt(6.0 / static_cast<double>(dims.input_width() + dims.h));
  const double lim_out = std::sqrt(6.0 / static_cast<double>(dims.h + dims.m));
  p.p_in = DMat(dims.h, dims.input_width());
  for (auto& x : p.p_in.data) x = rng.uniform(-lim_in, lim_in);
  p.b.assign(dims.h, 0.0);
  p.p_out = DMat(dims.m, dims.h);
  for (auto& x : p.p_out.data) x = rng.uniform(-lim_out, lim_out);
  p.gain.assign(dims.h, 1.0);
  p.bias.assign(dims.h, 0.0);
  return p;
}

/// (x - mean) / sqrt(var + 1e-5) * gain + bias, biased variance. The epsilon
/// keeps constant vectors finite (they normalize to the bias vector).
inline constexpr double kLayerNormEps = 1e-5;

inline Vec layer_norm(std::span<const double> x, std::span<const double> gain,
                      std::span<const double> bias) {
  if (x.empty()) throw ContractError("layer_norm needs at least one element");
  if (gain.size() != x.size() || bias.size() != x.size())
    throw ContractError("layer_norm gain/bias shape mismatch");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = (x[i] - mean) * inv_std * gain[i] + bias[i];
  return out;
}

/// Activations cached by encode() for the matching backward call.
struct ForwardTape {
  Vec x;           // concatenated input embeddings, k*m_in
  Vec a;           // tanh(P_in x + b), h
  Vec n;           // layer-normalized a before gain/bias, h
  Vec l;           // n*gain + bias, h
  double inv_std;  // 1/sqrt(var(a) + eps)
};

/// Encode a pre-concatenated input vector. The token-level overload below
/// handles embedding lookup.
inline Vec encode_vec(std::span<const double> x, const EncoderParams& p, ForwardTape* tape) {
  const EncoderDims& d = p.dims;
  if (x.size() != d.input_width()) throw ContractError("encoder input width mismatch");

  Vec z(d.h);
  matvec(p.p_in, x, z);
  Vec a(d.h);
  for (std::size_t i = 0; i < d.h; ++i) a[i] = std::tanh(z[i] + p.b[i]);

  double mean = 0.0;
  for (double v : a) mean += v;
  mean /= static_cast<double>(d.h);
  double var = 0.0;
  for (double v : a) var += (v - mean) * (v - mean);
  var /= static_cast<double>(d.h);
  const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);

  Vec n(d.h), l(d.h);
  for (std::size_t i = 0; i < d.h; ++i) {
    n[i] = (a[i] - mean) * inv_std;
    l[i] = n[i] * p.gain[i] + p.bias[i];
  }

  Vec c(d.m);
  matvec(p.p_out, l, c);

  if (tape) {
    tape->x.assign(x.begin(), x.end());
    tape->a = std::move(a);
    tape->n = std::move(n);
    tape->l = std::move(l);
    tape->inv_std = inv_std;
  }
  return c;
}

/// Token-level forward: looks up each context token in the (fixed) input
/// table, concatenates, and encodes. Unrepresentable tokens propagate the
/// lookup error.
inline Vec encode(std::span<const std::string> context, const EncoderParams& p,
                  const EmbeddingTable& table, ForwardTape* tape = nullptr) {
  const EncoderDims& d = p.dims;
  if (context.size() != d.k)
    throw ContractError("context has " + std::to_string(context.size()) + " tokens, expected " +
                        std::to_string(d.k));
  if (table.m != d.m_in) throw ContractError("input table dimension mismatch");
  Vec x;
  x.reserve(d.input_width());
  for (const auto& tok : context) {
    const Vec e = table.lookup(tok);
    x.insert(x.end(), e.begin(), e.end());
  }
  return encode_vec(x, p, tape);
}

/// Accumulate exact gradients of the encoder at one example into `grads`.
/// `dc` is dL/dc from the output layer. Pass `dx` to also get dL/dx (used
/// for Jacobian checks; never applied to the embedding table).
inline void encoder_backward(const EncoderParams& p, const ForwardTape& tape,
                             std::span<const double> dc, EncoderGrads& grads,
                             Vec* dx = nullptr) {
  const EncoderDims& d = p.dims;
  if (dc.size() != d.m) throw ContractError("dc dimension mismatch");
  if (tape.x.size() != d.input_width() || tape.a.size() != d.h)
    throw ContractError("tape does not match encoder dims");
  if (grads.p_in.rows != d.h || grads.p_in.cols != d.input_width() ||
      grads.p_out.rows != d.m || grads.p_out.cols != d.h || grads.b.size() != d.h)
    throw ContractError("gradient buffers do not match encoder dims");

  // c = P_out l  =>  dP_out = dc ⊗ l, dl = P_out^T dc.
  Vec dl(d.h, 0.0);
  for (std::size_t r = 0; r < d.m; ++r) {
    const double g = dc[r];
    double* grow = grads.p_out[r];
    const double* prow = p.p_out[r];
    for (std::size_t i = 0; i < d.h; ++i) {
      grow[i] += g * tape.l[i];
      dl[i] += g * prow[i];
    }
  }

  // l = n*gain + bias.
  Vec dn(d.h);
  for (std::size_t i = 0; i < d.h; ++i) {
    grads.gain[i] += dl[i] * tape.n[i];
    grads.bias[i] += dl[i];
    dn[i] = dl[i] * p.gain[i];
  }

  // Layer-norm backward: da_i = inv_std (dn_i - mean(dn) - n_i mean(dn·n)).
  double mean_dn = 0.0, mean_dnn = 0.0;
  for (std::size_t i = 0; i < d.h; ++i) {
    mean_dn += dn[i];
    mean_dnn += dn[i] * tape.n[i];
  }
  mean_dn /= static_cast<double>(d.h);
  mean_dnn /= static_cast<double>(d.h);

  // a = tanh(z): dz = da (1 - a^2); z = P_in x + b.
  for (std::size_t i = 0; i < d.h; ++i) {
    const double da = tape.inv_std * (dn[i] - mean_dn - tape.n[i] * mean_dnn);
    const double dz = da * (1.0 - tape.a[i] * tape.a[i]);
    grads.b[i] += dz;
    double* grow = grads.p_in[i];
    for (std::size_t j = 0; j < d.input_width(); ++j) grow[j] += dz * tape.x[j];
  }

  if (dx) {
    dx->assign(d.input_width(), 0.0);
    for (std::size_t i = 0; i < d.h; ++i) {
      const double da = tape.inv_std *
                        ((dn[i] - mean_dn) - tape.n[i] * mean_dnn);
      const double dz = da * (1.0 - tape.a[i] * tape.a[i]);
      axpy(dz, p.p_in.row(i), *dx);
    }
  }
}

/// Linear warmup into a constant plateau: lr(t) = base * min(1, t/warmup).
struct LrSchedule {
  double base = 0.1;
  std::size_t warmup = 0;

  double lr(std::size_t t) const {
    if (warmup == 0) return base;
    const double f = static_cast<double>(t) / static_cast<double>(warmup);
    return base * std::min(1.0, f);
  }
};

/// params <- params - lr * grads. Aborts on non-finite gradients: a NaN here
/// poisons every parameter it touches, so the step refuses to apply.
inline void sgd_step(EncoderParams& p, const EncoderGrads& g, double lr) {
  auto check = [](const Vec& v, const char* what) {
    for (double x : v)
      if (!std::isfinite(x))
        throw NumericError(std::string("non-finite gradient in ") + what);
  };
  check(g.p_in.data, "input projection");
  check(g.b, "hidden bias");
  check(g.p_out.data, "output projection");
  check(g.gain, "layer-norm gain");
  check(g.bias, "layer-norm bias");

  auto apply = [lr](Vec& dst, const Vec& src) {
    if (dst.size() != src.size()) throw ContractError("sgd_step shape mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= lr * src[i];
  };
  apply(p.p_in.data, g.p_in.data);
  apply(p.b, g.b);
  apply(p.p_out.data, g.p_out.data);
  apply(p.gain, g.gain);
  apply(p.bias, g.bias);
}

}  // namespace lmkit
