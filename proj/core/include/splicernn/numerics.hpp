#pragma once

#include <cmath>

#include "splicernn/matrix.hpp"
#include "splicernn/rng.hpp"

namespace splicernn {

// Logistic function, overflow-safe: for x < 0 it is computed as
// e^x / (1 + e^x) so very negative inputs decay to 0 instead of
// overflowing exp(-x).
template <class T>
inline T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <class T>
inline T relu(T x) {
  return x > T(0) ? x : T(0);
}

enum class InitKind { uniform_scaled, identity_scaled, zeros };

struct Initializer {
  InitKind kind = InitKind::zeros;
  double scale = 1.0;  // identity_scaled only

  static Initializer uniform_scaled() { return {InitKind::uniform_scaled, 1.0}; }
  static Initializer identity_scaled(double s) { return {InitKind::identity_scaled, s}; }
  static Initializer zeros() { return {InitKind::zeros, 1.0}; }
};

// uniform_scaled draws from U(-L, L) with L = sqrt(6 / (rows + cols));
// identity_scaled returns s*I and requires a square shape.
template <class T = double>
MatrixT<T> init_matrix(std::size_t rows, std::size_t cols, const Initializer& init, Rng& rng) {
  MatrixT<T> out(rows, cols);
  switch (init.kind) {
    case InitKind::zeros:
      break;
    case InitKind::uniform_scaled: {
      const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
      for (T& v : out.data) v = static_cast<T>(rng.uniform(-limit, limit));
      break;
    }
    case InitKind::identity_scaled: {
      if (rows != cols)
        throw ValidationError("identity_scaled initializer requires a square matrix, got " +
                              detail::shape_str(rows, cols));
      if (init.scale <= 0.0) throw ValidationError("identity_scaled requires scale > 0");
      for (std::size_t i = 0; i < rows; ++i) out(i, i) = static_cast<T>(init.scale);
      break;
    }
  }
  return out;
}

// Inverted dropout mask: entries are 0 with probability rate, else
// 1/(1-rate), so the mask has expectation 1 and inference needs no
// rescaling. Masks are only ever applied in training mode.
template <class T = double>
MatrixT<T> dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw ValidationError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  MatrixT<T> mask(rows, cols);
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  for (T& v : mask.data) v = rng.next_double() < rate ? T(0) : keep;
  return mask;
}

}  // namespace splicernn
