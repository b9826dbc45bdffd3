#pragma once

#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "splicernn/matrix.hpp"
#include "splicernn/rng.hpp"

namespace splicernn {

enum class CellKind { lstm, gru, irnn };

std::string_view cell_kind_name(CellKind kind);
CellKind cell_kind_from_name(std::string_view name);

using Vec = std::vector<double>;

// Per-sequence recurrent state; `c` is used by the LSTM only.
struct CellState {
  Vec h;
  Vec c;
};

// Activations recorded during one forward step, consumed by the backward
// pass. Fields not used by a given cell kind stay empty.
struct StepCache {
  Vec x;
  Vec h_prev;
  Vec c_prev;
  Vec i, f, g, o;    // LSTM gates / candidate
  Vec c_new, tanh_c;
  Vec z, r, hbar, rh;  // GRU update, reset, candidate, r (x) h_prev
  Vec pre;           // iRNN pre-activation
  Vec h_new;
};

// Peephole LSTM:
//   i = sig(W_xi x + W_hi h + w_ci (x) c + b_i)
//   f = sig(W_xf x + W_hf h + w_cf (x) c + b_f)
//   g = tanh(W_xc x + W_hc h + b_c)
//   c' = f (x) c + i (x) g
//   o = sig(W_xo x + W_ho h + w_co (x) c' + b_o)
//   h' = o (x) tanh(c')
// Peepholes are diagonal (held as h-vectors, applied elementwise); the
// output gate peeks at the updated cell c'.
struct LstmParams {
  Tensor W_xi, W_hi, w_ci, b_i;
  Tensor W_xf, W_hf, w_cf, b_f;
  Tensor W_xc, W_hc, b_c;
  Tensor W_xo, W_ho, w_co, b_o;

  std::size_t input_dim() const { return W_xi.value.cols; }
  std::size_t hidden_dim() const { return W_xi.value.rows; }

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    f("W_xi", self.W_xi); f("W_hi", self.W_hi); f("w_ci", self.w_ci); f("b_i", self.b_i);
    f("W_xf", self.W_xf); f("W_hf", self.W_hf); f("w_cf", self.w_cf); f("b_f", self.b_f);
    f("W_xc", self.W_xc); f("W_hc", self.W_hc); f("b_c", self.b_c);
    f("W_xo", self.W_xo); f("W_ho", self.W_ho); f("w_co", self.w_co); f("b_o", self.b_o);
  }
  template <class F> void for_each_tensor(F&& f) { visit(*this, f); }
  template <class F> void for_each_tensor(F&& f) const { visit(*this, f); }
};

// GRU:
//   z = sig(W_xz x + W_hz h + b_z)
//   r = sig(W_xr x + W_hr h + b_r)
//   hbar = tanh(W_xh x + W_hh (r (x) h) + b_h)
//   h' = (1 - z) (x) h + z (x) hbar      (z gates how much new content enters)
struct GruParams {
  Tensor W_xz, W_hz, b_z;
  Tensor W_xr, W_hr, b_r;
  Tensor W_xh, W_hh, b_h;

  std::size_t input_dim() const { return W_xz.value.cols; }
  std::size_t hidden_dim() const { return W_xz.value.rows; }

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    f("W_xz", self.W_xz); f("W_hz", self.W_hz); f("b_z", self.b_z);
    f("W_xr", self.W_xr); f("W_hr", self.W_hr); f("b_r", self.b_r);
    f("W_xh", self.W_xh); f("W_hh", self.W_hh); f("b_h", self.b_h);
  }
  template <class F> void for_each_tensor(F&& f) { visit(*this, f); }
  template <class F> void for_each_tensor(F&& f) const { visit(*this, f); }
};

// ReLU recurrence h' = relu(W_xh x + W_hh h + b) with W_hh initialized to a
// scaled identity.
struct IrnnParams {
  Tensor W_xh, W_hh, b;

  std::size_t input_dim() const { return W_xh.value.cols; }
  std::size_t hidden_dim() const { return W_xh.value.rows; }

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    f("W_xh", self.W_xh); f("W_hh", self.W_hh); f("b", self.b);
  }
  template <class F> void for_each_tensor(F&& f) { visit(*this, f); }
  template <class F> void for_each_tensor(F&& f) const { visit(*this, f); }
};

// Fresh parameters: weight matrices get scaled-uniform (Glorot) draws,
// biases start at zero except the LSTM forget bias (+1), peepholes start at
// zero, and the iRNN recurrent matrix is the scaled identity.
LstmParams make_lstm_params(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);
GruParams make_gru_params(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);
IrnnParams make_irnn_params(std::size_t input_dim, std::size_t hidden_dim,
                            double recurrent_scale, Rng& rng);

CellState make_cell_state(CellKind kind, std::size_t hidden_dim);

void lstm_step(const LstmParams& p, std::span<const double> x, CellState& state,
               StepCache& cache);
void gru_step(const GruParams& p, std::span<const double> x, CellState& state, StepCache& cache);
void irnn_step(const IrnnParams& p, std::span<const double> x, CellState& state,
               StepCache& cache);

// Reverse-mode pass over a full sequence. d_out[t] is the upstream gradient
// on the step-t hidden output; parameter gradients accumulate into the grad
// buffers and the per-step input gradients are returned.
std::vector<Vec> lstm_backward(LstmParams& p, std::span<const StepCache> caches,
                               std::span<const Vec> d_out);
std::vector<Vec> gru_backward(GruParams& p, std::span<const StepCache> caches,
                              std::span<const Vec> d_out);
std::vector<Vec> irnn_backward(IrnnParams& p, std::span<const StepCache> caches,
                               std::span<const Vec> d_out);

// Convenience for a loss that reads only the final hidden state.
std::vector<Vec> lstm_backward(LstmParams& p, std::span<const StepCache> caches,
                               const Vec& d_h_final);
std::vector<Vec> gru_backward(GruParams& p, std::span<const StepCache> caches,
                              const Vec& d_h_final);
std::vector<Vec> irnn_backward(IrnnParams& p, std::span<const StepCache> caches,
                               const Vec& d_h_final);

using CellParams = std::variant<LstmParams, GruParams, IrnnParams>;

CellKind kind_of(const CellParams& params);
std::size_t cell_input_dim(const CellParams& params);
std::size_t cell_hidden_dim(const CellParams& params);

CellParams make_cell_params(CellKind kind, std::size_t input_dim, std::size_t hidden_dim,
                            double irnn_scale, Rng& rng);
void cell_step(const CellParams& params, std::span<const double> x, CellState& state,
               StepCache& cache);
std::vector<Vec> cell_backward(CellParams& params, std::span<const StepCache> caches,
                               std::span<const Vec> d_out);

// Closed-form parameter counts per layer.
constexpr std::size_t lstm_param_count(std::size_t d, std::size_t h) {
  return 4 * h * (d + h) + 3 * h + 4 * h;
}
constexpr std::size_t gru_param_count(std::size_t d, std::size_t h) {
  return 3 * h * (d + h) + 3 * h;
}
constexpr std::size_t irnn_param_count(std::size_t d, std::size_t h) {
  return h * (d + h) + h;
}
std::size_t cell_param_count(const CellParams& params);

template <class F>
void visit_cell_tensors(CellParams& params, F&& f) {
  std::visit([&](auto& p) { p.for_each_tensor(f); }, params);
}
template <class F>
void visit_cell_tensors(const CellParams& params, F&& f) {
  std::visit([&](const auto& p) { p.for_each_tensor(f); }, params);
}

}  // namespace splicernn
