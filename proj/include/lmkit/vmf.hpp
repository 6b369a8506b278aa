#pragma once

// Exponentially-scaled modified-Bessel machinery for the von Mises-Fisher
// loss: everything stays in log space so no intermediate overflows for any
// double-range argument.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "lmkit/common.hpp"

namespace lmkit {

namespace detail {

/// Ascending series in log space: log I_nu(k) = LSE_j [(2j+nu) log(k/2)
/// - lgamma(j+1) - lgamma(nu+j+1)]. All terms positive; converges for any k,
/// affordable below the large-argument switchover.
inline double log_bessel_series(double nu, double k) {
  const double lhalf = std::log(k / 2.0);
  double mx = -std::numeric_limits<double>::infinity();
  double sum = 0.0;  // sum of exp(t_j - mx)
  double prev = mx;
  for (std::size_t j = 0;; ++j) {
    const double jj = static_cast<double>(j);
    const double t = (2.0 * jj + nu) * lhalf - std::lgamma(jj + 1.0) - std::lgamma(nu + jj + 1.0);
    if (t > mx) {
      sum = sum * std::exp(mx - t) + 1.0;
      mx = t;
    } else {
      sum += std::exp(t - mx);
    }
    if (j > 0 && t < prev && t < mx - 60.0) break;
    prev = t;
    if (j > 500'000)
      throw NumericError("bessel series did not converge: nu=" + std::to_string(nu) +
                         " k=" + std::to_string(k));
  }
  return mx + std::log(sum);
}

/// Large-argument (Hankel) expansion, optimally truncated at the smallest
/// term. Reliable for nu <= 12 once k >= 20; half-integer orders terminate
/// exactly.
inline double log_bessel_hankel(double nu, double k) {
  const double mu = 4.0 * nu * nu;
  constexpr int kCap = 60;
  double terms[kCap + 1];
  terms[0] = 1.0;
  double t = 1.0;
  int n = 1;
  for (int j = 1; j <= kCap; ++j) {
    const double d = 2.0 * j - 1.0;
    t *= -(mu - d * d) / (8.0 * j * k);
    terms[n++] = t;
    if (t == 0.0) break;  // terminating series (half-integer order)
  }
  int best = 1;
  for (int j = 2; j < n; ++j)
    if (std::abs(terms[j]) < std::abs(terms[best])) best = j;
  double s = 0.0;
  for (int j = 0; j < best; ++j) s += terms[j];
  if (!(s > 0.0))
    throw NumericError("bessel asymptotic sum non-positive: nu=" + std::to_string(nu) +
                       " k=" + std::to_string(k));
  return k - 0.5 * std::log(2.0 * kPi * k) + std::log(s);
}

/// Debye polynomials u_0..u_IMAX for the uniform large-order expansion,
/// built once from u_{i+1}(t) = t^2(1-t^2)/2 u_i'(t)
///                              + 1/8 ∫_0^t (1-5 s^2) u_i(s) ds.
inline const std::vector<std::vector<double>>& debye_polynomials() {
  static const std::vector<std::vector<double>> polys = [] {
    constexpr std::size_t kImax = 10;
    std::vector<std::vector<double>> us;
    us.push_back({1.0});
    for (std::size_t i = 0; i < kImax; ++i) {
      const auto& u = us.back();
      std::vector<double> next(u.size() + 4, 0.0);
      for (std::size_t p = 1; p < u.size(); ++p) {
        const double dcoef = static_cast<double>(p) * u[p];  // u' term t^{p-1}
        next[p + 1] += 0.5 * dcoef;                          // t^2/2 * u'
        next[p + 3] -= 0.5 * dcoef;                          // -t^4/2 * u'
      }
      for (std::size_t p = 0; p < u.size(); ++p) {
        next[p + 1] += u[p] / (8.0 * (p + 1));               // 1/8 ∫ u
        next[p + 3] -= 5.0 * u[p] / (8.0 * (p + 3));         // -5/8 ∫ s^2 u
      }
      while (!next.empty() && next.back() == 0.0) next.pop_back();
      us.push_back(std::move(next));
    }
    return us;
  }();
  return polys;
}

/// Uniform large-order (Debye) expansion; the workhorse for nu > 12 with
/// k at or above the order.
inline double log_bessel_uniform(double nu, double k) {
  const double z = k / nu;
  const double r = std::hypot(1.0, z);  // sqrt(1+z^2)
  const double t = 1.0 / r;
  const double eta = r + std::log(z / (1.0 + r));
  const auto& us = debye_polynomials();
  double s = 0.0;
  double nupow = 1.0;
  for (const auto& u : us) {
    double ui = 0.0;
    for (std::size_t p = u.size(); p-- > 0;) ui = ui * t + u[p];
    s += ui / nupow;
    nupow *= nu;
  }
  if (!(s > 0.0))
    throw NumericError("bessel uniform-expansion sum non-positive: nu=" + std::to_string(nu) +
                       " k=" + std::to_string(k));
  return -0.5 * std::log(2.0 * kPi * nu) - 0.5 * std::log(r) + nu * eta + std::log(s);
}

}  // namespace detail

/// log I_nu(k) for nu >= 0, k >= 0. Series below the switchover
/// k = max(20, nu); Hankel above it for small orders, uniform expansion for
/// large orders.
inline double log_bessel_i(double nu, double k) {
  if (nu < 0.0 || k < 0.0 || std::isnan(nu) || std::isnan(k))
    throw ContractError("log_bessel_i: need nu >= 0 and k >= 0");
  if (k == 0.0) return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  double out;
  if (k < std::max(20.0, nu)) {
    out = detail::log_bessel_series(nu, k);
  } else if (nu <= 12.0) {
    out = detail::log_bessel_hankel(nu, k);
  } else {
    out = detail::log_bessel_uniform(nu, k);
  }
  if (std::isnan(out))
    throw NumericError("log_bessel_i lost precision: nu=" + std::to_string(nu) +
                       " k=" + std::to_string(k));
  return out;
}

/// R_nu(k) = I_{nu+1}(k) / I_nu(k) in (0,1), by the Gauss/Perron continued
/// fraction R = 1/(b1 + 1/(b2 + ...)), b_j = 2(nu+j)/k, evaluated with
/// modified Lentz.
inline double bessel_ratio(double nu, double k) {
  if (nu < 0.0 || !(k > 0.0))
    throw ContractError("bessel_ratio: need nu >= 0 and k > 0");
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  double f = tiny, c = tiny, d = 0.0;
  const std::size_t cap = static_cast<std::size_t>(4.0 * k) + 10'000;
  for (std::size_t j = 1; j <= cap; ++j) {
    const double b = 2.0 * (nu + static_cast<double>(j)) / k;
    d = b + d;
    if (d == 0.0) d = tiny;
    c = b + 1.0 / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < eps) return f;
  }
  throw NumericError("bessel_ratio continued fraction did not converge: nu=" +
                     std::to_string(nu) + " k=" + std::to_string(k));
}

/// log C_m(k) of the vMF density, fully in log space:
/// (m/2-1) log k - (m/2) log 2π - log I_{m/2-1}(k).
inline double log_cm(double k, std::size_t m) {
  if (!(k > 0.0)) throw ContractError("log_cm: need k > 0");
  if (m < 2) throw ContractError("log_cm: need m >= 2");
  const double nu = static_cast<double>(m) / 2.0 - 1.0;
  const double out =
      nu * std::log(k) - (static_cast<double>(m) / 2.0) * std::log(2.0 * kPi) -
      log_bessel_i(nu, k);
  if (!std::isfinite(out))
    throw NumericError("log_cm overflow: k=" + std::to_string(k) + " m=" + std::to_string(m));
  return out;
}

}  // namespace lmkit
