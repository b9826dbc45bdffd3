#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "splicernn/errors.hpp"

namespace splicernn {

// Dense row-major matrix. Double precision is the default for the whole
// training stack; the float instantiation exists as a speed option with
// correspondingly relaxed accuracy.
template <class T>
struct MatrixT {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;  // row-major, rows*cols entries

  MatrixT() = default;
  MatrixT(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<T> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const T> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const MatrixT& o) const { return rows == o.rows && cols == o.cols; }
  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool all_finite() const {
    for (const T v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

using Matrix = MatrixT<double>;
using Matrix32 = MatrixT<float>;

namespace detail {
inline std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}
}  // namespace detail

template <class T>
MatrixT<T> matmul(const MatrixT<T>& a, const MatrixT<T>& b) {
  if (a.cols != b.rows)
    throw ValidationError("matmul: incompatible shapes " + detail::shape_str(a.rows, a.cols) +
                          " * " + detail::shape_str(b.rows, b.cols));
  MatrixT<T> out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const T* arow = a.data.data() + i * a.cols;
    T* orow = out.data.data() + i * out.cols;
    for (std::size_t k = 0; k < a.cols; ++k) {
      const T aik = arow[k];
      const T* brow = b.data.data() + k * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

template <class T>
MatrixT<T> transposed(const MatrixT<T>& a) {
  MatrixT<T> out(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
  return out;
}

// out += W x
template <class T>
void matvec_acc(std::span<T> out, const MatrixT<T>& w, std::span<const T> x) {
  assert(out.size() == w.rows && x.size() == w.cols);
  for (std::size_t i = 0; i < w.rows; ++i) {
    const T* wrow = w.data.data() + i * w.cols;
    T acc{};
    for (std::size_t j = 0; j < w.cols; ++j) acc += wrow[j] * x[j];
    out[i] += acc;
  }
}

// out += W^T y
template <class T>
void matvec_transposed_acc(std::span<T> out, const MatrixT<T>& w, std::span<const T> y) {
  assert(out.size() == w.cols && y.size() == w.rows);
  for (std::size_t i = 0; i < w.rows; ++i) {
    const T yi = y[i];
    const T* wrow = w.data.data() + i * w.cols;
    for (std::size_t j = 0; j < w.cols; ++j) out[j] += wrow[j] * yi;
  }
}

// acc += y x^T
template <class T>
void outer_acc(MatrixT<T>& acc, std::span<const T> y, std::span<const T> x) {
  assert(acc.rows == y.size() && acc.cols == x.size());
  for (std::size_t i = 0; i < acc.rows; ++i) {
    const T yi = y[i];
    T* arow = acc.data.data() + i * acc.cols;
    for (std::size_t j = 0; j < acc.cols; ++j) arow[j] += yi * x[j];
  }
}

// Trainable parameter: value plus a same-shaped gradient accumulation buffer.
struct Tensor {
  Matrix value;
  Matrix grad;

  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols) : value(rows, cols), grad(rows, cols) {}

  std::size_t size() const { return value.size(); }
  void zero_grad() { grad.fill(0.0); }
};

struct NamedTensor {
  std::string name;
  Tensor* tensor = nullptr;
};

}  // namespace splicernn
