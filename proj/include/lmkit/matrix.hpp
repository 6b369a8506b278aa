#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lmkit/common.hpp"

namespace lmkit {

/// Minimal dense row-major matrix. Heavy fixed tables use Mat<float>,
/// trainable parameters use Mat<double>.
template <class T>
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}

  T* operator[](std::size_t r) { return data.data() + r * cols; }
  const T* operator[](std::size_t r) const { return data.data() + r * cols; }

  std::span<T> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const T> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  T& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::size_t size() const { return data.size(); }

  void fill_uniform(Rng& rng, double lo, double hi) {
    for (T& v : data) v = static_cast<T>(rng.uniform(lo, hi));
  }
  void fill_gaussian(Rng& rng, double stddev = 1.0) {
    for (T& v : data) v = static_cast<T>(stddev * rng.gaussian());
  }
};

using DMat = Mat<double>;
using FMat = Mat<float>;

/// y = A x  (A: r x c, x: c, y: r)
template <class T>
void matvec(const Mat<T>& a, std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < a.rows; ++r) y[r] = dot(a.row(r), x);
}

/// y = A^T x  (A: r x c, x: r, y: c)
template <class T>
void matvec_t(const Mat<T>& a, std::span<const double> x, std::span<double> y) {
  for (std::size_t c = 0; c < a.cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < a.rows; ++r) {
    const T* row = a[r];
    const double xr = x[r];
    for (std::size_t c = 0; c < a.cols; ++c) y[c] += xr * static_cast<double>(row[c]);
  }
}

inline DMat matmul(const DMat& a, const DMat& b) {
  DMat out(a.rows, b.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      const double* brow = b[k];
      double* orow = out[i];
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

inline DMat transposed(const DMat& a) {
  DMat out(a.cols, a.rows);
  for (std::size_t r = 0; r < a.rows; ++r)
    for (std::size_t c = 0; c < a.cols; ++c) out.at(c, r) = a.at(r, c);
  return out;
}

inline double frobenius_distance(const DMat& a, const DMat& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double frobenius_norm(const DMat& a) {
  return std::sqrt(squared_norm(a.data));
}

}  // namespace lmkit
