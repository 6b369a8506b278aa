#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lmkit {

using Vec = std::vector<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Bad invocation or malformed input (CLI exit code 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A documented contract was violated by the caller (CLI exit code 3).
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numeric breakdown: NaN gradients, degenerate vectors, non-convergence
/// (CLI exit code 4).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : s) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Deterministic RNG. mt19937_64 has a portable bit stream; floats are
/// built from the raw bits so sequences are identical across platforms
/// (std::uniform_real_distribution makes no such guarantee).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling keeps the distribution exact for any n.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = gen_();
    while (v >= limit) v = gen_();
    return v % n;
  }

  /// Standard normal via Box-Muller (portable, unlike normal_distribution).
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

template <class A, class B>
double dot(const A& a, const B& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

template <class A>
double squared_norm(const A& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(a[i]);
  return s;
}

template <class A>
double norm(const A& a) {
  return std::sqrt(squared_norm(a));
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(double alpha, std::span<double> x) {
  for (double& v : x) v *= alpha;
}

/// Unit-normalized copy. A (near-)zero vector is an error, not an epsilon.
template <class A>
Vec normalized(const A& v, double min_norm = 1e-12) {
  const double n = norm(v);
  if (!(n > min_norm)) {
    throw NumericError("cannot normalize a zero vector (norm=" + std::to_string(n) + ")");
  }
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]) / n;
  return out;
}

template <class A, class B>
double cosine(const A& a, const B& b) {
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw NumericError("cosine of zero vector");
  return dot(a, b) / (na * nb);
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace lmkit
