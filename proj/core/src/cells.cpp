#include "splicernn/cells.hpp"

#include <cassert>
#include <cmath>
#include <string>

#include "splicernn/numerics.hpp"

namespace splicernn {

namespace {

void check_input_dim(std::size_t expected, std::size_t got) {
  if (expected != got)
    throw ValidationError("cell step: input has dimension " + std::to_string(got) +
                          ", parameters expect " + std::to_string(expected));
}

void check_state_dim(std::size_t expected, std::size_t got) {
  if (expected != got)
    throw ValidationError("cell step: state has dimension " + std::to_string(got) +
                          ", parameters expect " + std::to_string(expected));
}

void check_backward_args(std::size_t caches, std::size_t upstream) {
  if (caches == 0) throw ValidationError("cell backward: empty cache sequence");
  if (caches != upstream)
    throw ValidationError("cell backward: cache/sequence length mismatch (" +
                          std::to_string(caches) + " caches, " + std::to_string(upstream) +
                          " upstream gradients)");
}

// preactivation buffer: out = b (+ W_x x + W_h h added by caller)
void load_bias(Vec& out, const Tensor& b) {
  out.assign(b.value.data.begin(), b.value.data.end());
}

void add_inplace(Vec& out, const Vec& v) {
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += v[k];
}

std::vector<Vec> final_only_upstream(std::size_t steps, std::size_t hidden, const Vec& d_h_final) {
  std::vector<Vec> d_out(steps, Vec(hidden, 0.0));
  d_out.back() = d_h_final;
  return d_out;
}

}  // namespace

std::string_view cell_kind_name(CellKind kind) {
  switch (kind) {
    case CellKind::lstm: return "lstm";
    case CellKind::gru: return "gru";
    case CellKind::irnn: return "irnn";
  }
  return "?";
}

CellKind cell_kind_from_name(std::string_view name) {
  if (name == "lstm") return CellKind::lstm;
  if (name == "gru") return CellKind::gru;
  if (name == "irnn") return CellKind::irnn;
  throw ValidationError("unknown cell kind '" + std::string(name) + "' (expected lstm|gru|irnn)");
}

LstmParams make_lstm_params(std::size_t d, std::size_t h, Rng& rng) {
  const Initializer glorot = Initializer::uniform_scaled();
  LstmParams p;
  auto weight = [&](Tensor& t, std::size_t rows, std::size_t cols) {
    t.value = init_matrix(rows, cols, glorot, rng);
    t.grad = Matrix(rows, cols);
  };
  auto zero_vec = [&](Tensor& t) { t = Tensor(h, 1); };
  weight(p.W_xi, h, d); weight(p.W_hi, h, h); zero_vec(p.w_ci); zero_vec(p.b_i);
  weight(p.W_xf, h, d); weight(p.W_hf, h, h); zero_vec(p.w_cf); zero_vec(p.b_f);
  weight(p.W_xc, h, d); weight(p.W_hc, h, h); zero_vec(p.b_c);
  weight(p.W_xo, h, d); weight(p.W_ho, h, h); zero_vec(p.w_co); zero_vec(p.b_o);
  p.b_f.value.fill(1.0);  // open forget gates at the start
  return p;
}

GruParams make_gru_params(std::size_t d, std::size_t h, Rng& rng) {
  const Initializer glorot = Initializer::uniform_scaled();
  GruParams p;
  auto weight = [&](Tensor& t, std::size_t rows, std::size_t cols) {
    t.value = init_matrix(rows, cols, glorot, rng);
    t.grad = Matrix(rows, cols);
  };
  auto zero_vec = [&](Tensor& t) { t = Tensor(h, 1); };
  weight(p.W_xz, h, d); weight(p.W_hz, h, h); zero_vec(p.b_z);
  weight(p.W_xr, h, d); weight(p.W_hr, h, h); zero_vec(p.b_r);
  weight(p.W_xh, h, d); weight(p.W_hh, h, h); zero_vec(p.b_h);
  return p;
}

IrnnParams make_irnn_params(std::size_t d, std::size_t h, double recurrent_scale, Rng& rng) {
  IrnnParams p;
  p.W_xh.value = init_matrix(h, d, Initializer::uniform_scaled(), rng);
  p.W_xh.grad = Matrix(h, d);
  p.W_hh.value = init_matrix(h, h, Initializer::identity_scaled(recurrent_scale), rng);
  p.W_hh.grad = Matrix(h, h);
  p.b = Tensor(h, 1);
  return p;
}

CellState make_cell_state(CellKind kind, std::size_t hidden_dim) {
  CellState s;
  s.h.assign(hidden_dim, 0.0);
  if (kind == CellKind::lstm) s.c.assign(hidden_dim, 0.0);
  return s;
}

void lstm_step(const LstmParams& p, std::span<const double> x, CellState& state,
               StepCache& cache) {
  const std::size_t h = p.hidden_dim();
  check_input_dim(p.input_dim(), x.size());
  check_state_dim(h, state.h.size());
  check_state_dim(h, state.c.size());

  cache.x.assign(x.begin(), x.end());
  cache.h_prev = state.h;
  cache.c_prev = state.c;

  Vec& gi = cache.i;
  Vec& gf = cache.f;
  Vec& gg = cache.g;
  Vec& go = cache.o;

  load_bias(gi, p.b_i);
  matvec_acc<double>(gi, p.W_xi.value, x);
  matvec_acc<double>(gi, p.W_hi.value, cache.h_prev);
  load_bias(gf, p.b_f);
  matvec_acc<double>(gf, p.W_xf.value, x);
  matvec_acc<double>(gf, p.W_hf.value, cache.h_prev);
  load_bias(gg, p.b_c);
  matvec_acc<double>(gg, p.W_xc.value, x);
  matvec_acc<double>(gg, p.W_hc.value, cache.h_prev);
  for (std::size_t k = 0; k < h; ++k) {
    gi[k] = sigmoid(gi[k] + p.w_ci.value.data[k] * cache.c_prev[k]);
    gf[k] = sigmoid(gf[k] + p.w_cf.value.data[k] * cache.c_prev[k]);
    gg[k] = std::tanh(gg[k]);
  }

  cache.c_new.resize(h);
  for (std::size_t k = 0; k < h; ++k)
    cache.c_new[k] = gf[k] * cache.c_prev[k] + gi[k] * gg[k];

  load_bias(go, p.b_o);
  matvec_acc<double>(go, p.W_xo.value, x);
  matvec_acc<double>(go, p.W_ho.value, cache.h_prev);
  cache.tanh_c.resize(h);
  cache.h_new.resize(h);
  for (std::size_t k = 0; k < h; ++k) {
    go[k] = sigmoid(go[k] + p.w_co.value.data[k] * cache.c_new[k]);
    cache.tanh_c[k] = std::tanh(cache.c_new[k]);
    cache.h_new[k] = go[k] * cache.tanh_c[k];
  }

  state.h = cache.h_new;
  state.c = cache.c_new;
}

void gru_step(const GruParams& p, std::span<const double> x, CellState& state, StepCache& cache) {
  const std::size_t h = p.hidden_dim();
  check_input_dim(p.input_dim(), x.size());
  check_state_dim(h, state.h.size());

  cache.x.assign(x.begin(), x.end());
  cache.h_prev = state.h;

  Vec& z = cache.z;
  Vec& r = cache.r;
  Vec& hbar = cache.hbar;

  load_bias(z, p.b_z);
  matvec_acc<double>(z, p.W_xz.value, x);
  matvec_acc<double>(z, p.W_hz.value, cache.h_prev);
  load_bias(r, p.b_r);
  matvec_acc<double>(r, p.W_xr.value, x);
  matvec_acc<double>(r, p.W_hr.value, cache.h_prev);
  for (std::size_t k = 0; k < h; ++k) {
    z[k] = sigmoid(z[k]);
    r[k] = sigmoid(r[k]);
  }

  cache.rh.resize(h);
  for (std::size_t k = 0; k < h; ++k) cache.rh[k] = r[k] * cache.h_prev[k];

  load_bias(hbar, p.b_h);
  matvec_acc<double>(hbar, p.W_xh.value, x);
  matvec_acc<double>(hbar, p.W_hh.value, cache.rh);
  cache.h_new.resize(h);
  for (std::size_t k = 0; k < h; ++k) {
    hbar[k] = std::tanh(hbar[k]);
    cache.h_new[k] = (1.0 - z[k]) * cache.h_prev[k] + z[k] * hbar[k];
  }

  state.h = cache.h_new;
}

void irnn_step(const IrnnParams& p, std::span<const double> x, CellState& state,
               StepCache& cache) {
  const std::size_t h = p.hidden_dim();
  check_input_dim(p.input_dim(), x.size());
  check_state_dim(h, state.h.size());

  cache.x.assign(x.begin(), x.end());
  cache.h_prev = state.h;

  Vec& pre = cache.pre;
  load_bias(pre, p.b);
  matvec_acc<double>(pre, p.W_xh.value, x);
  matvec_acc<double>(pre, p.W_hh.value, cache.h_prev);

  cache.h_new.resize(h);
  for (std::size_t k = 0; k < h; ++k) cache.h_new[k] = relu(pre[k]);
  state.h = cache.h_new;
}

std::vector<Vec> lstm_backward(LstmParams& p, std::span<const StepCache> caches,
                               std::span<const Vec> d_out) {
  check_backward_args(caches.size(), d_out.size());
  const std::size_t T = caches.size();
  const std::size_t h = p.hidden_dim();
  const std::size_t d = p.input_dim();

  std::vector<Vec> d_x(T, Vec(d, 0.0));
  Vec dh(h, 0.0), dc(h, 0.0);
  Vec dpre_i(h), dpre_f(h), dpre_g(h), dpre_o(h);

  for (std::size_t t = T; t-- > 0;) {
    const StepCache& cc = caches[t];
    add_inplace(dh, d_out[t]);

    // h' = o (x) tanh(c'); the output gate also sees c' through its peephole
    for (std::size_t k = 0; k < h; ++k) {
      dpre_o[k] = dh[k] * cc.tanh_c[k] * cc.o[k] * (1.0 - cc.o[k]);
      dc[k] += dh[k] * cc.o[k] * (1.0 - cc.tanh_c[k] * cc.tanh_c[k]) +
               dpre_o[k] * p.w_co.value.data[k];
    }
    for (std::size_t k = 0; k < h; ++k) {
      dpre_f[k] = dc[k] * cc.c_prev[k] * cc.f[k] * (1.0 - cc.f[k]);
      dpre_i[k] = dc[k] * cc.g[k] * cc.i[k] * (1.0 - cc.i[k]);
      dpre_g[k] = dc[k] * cc.i[k] * (1.0 - cc.g[k] * cc.g[k]);
    }

    outer_acc<double>(p.W_xi.grad, dpre_i, cc.x);
    outer_acc<double>(p.W_hi.grad, dpre_i, cc.h_prev);
    outer_acc<double>(p.W_xf.grad, dpre_f, cc.x);
    outer_acc<double>(p.W_hf.grad, dpre_f, cc.h_prev);
    outer_acc<double>(p.W_xc.grad, dpre_g, cc.x);
    outer_acc<double>(p.W_hc.grad, dpre_g, cc.h_prev);
    outer_acc<double>(p.W_xo.grad, dpre_o, cc.x);
    outer_acc<double>(p.W_ho.grad, dpre_o, cc.h_prev);
    for (std::size_t k = 0; k < h; ++k) {
      p.w_ci.grad.data[k] += dpre_i[k] * cc.c_prev[k];
      p.w_cf.grad.data[k] += dpre_f[k] * cc.c_prev[k];
      p.w_co.grad.data[k] += dpre_o[k] * cc.c_new[k];
      p.b_i.grad.data[k] += dpre_i[k];
      p.b_f.grad.data[k] += dpre_f[k];
      p.b_c.grad.data[k] += dpre_g[k];
      p.b_o.grad.data[k] += dpre_o[k];
    }

    matvec_transposed_acc<double>(d_x[t], p.W_xi.value, dpre_i);
    matvec_transposed_acc<double>(d_x[t], p.W_xf.value, dpre_f);
    matvec_transposed_acc<double>(d_x[t], p.W_xc.value, dpre_g);
    matvec_transposed_acc<double>(d_x[t], p.W_xo.value, dpre_o);

    std::fill(dh.begin(), dh.end(), 0.0);
    matvec_transposed_acc<double>(dh, p.W_hi.value, dpre_i);
    matvec_transposed_acc<double>(dh, p.W_hf.value, dpre_f);
    matvec_transposed_acc<double>(dh, p.W_hc.value, dpre_g);
    matvec_transposed_acc<double>(dh, p.W_ho.value, dpre_o);

    // carry into c_{t-1}: forget path plus the i/f peepholes reading c_{t-1}
    for (std::size_t k = 0; k < h; ++k)
      dc[k] = dc[k] * cc.f[k] + dpre_i[k] * p.w_ci.value.data[k] +
              dpre_f[k] * p.w_cf.value.data[k];
  }
  return d_x;
}

std::vector<Vec> gru_backward(GruParams& p, std::span<const StepCache> caches,
                              std::span<const Vec> d_out) {
  check_backward_args(caches.size(), d_out.size());
  const std::size_t T = caches.size();
  const std::size_t h = p.hidden_dim();
  const std::size_t d = p.input_dim();

  std::vector<Vec> d_x(T, Vec(d, 0.0));
  Vec dh(h, 0.0);
  Vec dpre_z(h), dpre_r(h), dpre_hbar(h), drh(h), dh_next(h);

  for (std::size_t t = T; t-- > 0;) {
    const StepCache& cc = caches[t];
    add_inplace(dh, d_out[t]);

    // h' = (1-z) (x) h + z (x) hbar
    for (std::size_t k = 0; k < h; ++k) {
      dpre_z[k] = dh[k] * (cc.hbar[k] - cc.h_prev[k]) * cc.z[k] * (1.0 - cc.z[k]);
      dpre_hbar[k] = dh[k] * cc.z[k] * (1.0 - cc.hbar[k] * cc.hbar[k]);
      dh_next[k] = dh[k] * (1.0 - cc.z[k]);
    }

    // candidate path: hbar = tanh(W_xh x + W_hh (r (x) h) + b_h)
    std::fill(drh.begin(), drh.end(), 0.0);
    matvec_transposed_acc<double>(drh, p.W_hh.value, dpre_hbar);
    for (std::size_t k = 0; k < h; ++k) {
      dpre_r[k] = drh[k] * cc.h_prev[k] * cc.r[k] * (1.0 - cc.r[k]);
      dh_next[k] += drh[k] * cc.r[k];
    }

    outer_acc<double>(p.W_xz.grad, dpre_z, cc.x);
    outer_acc<double>(p.W_hz.grad, dpre_z, cc.h_prev);
    outer_acc<double>(p.W_xr.grad, dpre_r, cc.x);
    outer_acc<double>(p.W_hr.grad, dpre_r, cc.h_prev);
    outer_acc<double>(p.W_xh.grad, dpre_hbar, cc.x);
    outer_acc<double>(p.W_hh.grad, dpre_hbar, cc.rh);
    for (std::size_t k = 0; k < h; ++k) {
      p.b_z.grad.data[k] += dpre_z[k];
      p.b_r.grad.data[k] += dpre_r[k];
      p.b_h.grad.data[k] += dpre_hbar[k];
    }

    matvec_transposed_acc<double>(d_x[t], p.W_xz.value, dpre_z);
    matvec_transposed_acc<double>(d_x[t], p.W_xr.value, dpre_r);
    matvec_transposed_acc<double>(d_x[t], p.W_xh.value, dpre_hbar);

    matvec_transposed_acc<double>(dh_next, p.W_hz.value, dpre_z);
    matvec_transposed_acc<double>(dh_next, p.W_hr.value, dpre_r);
    dh = dh_next;
  }
  return d_x;
}

std::vector<Vec> irnn_backward(IrnnParams& p, std::span<const StepCache> caches,
                               std::span<const Vec> d_out) {
  check_backward_args(caches.size(), d_out.size());
  const std::size_t T = caches.size();
  const std::size_t h = p.hidden_dim();
  const std::size_t d = p.input_dim();

  std::vector<Vec> d_x(T, Vec(d, 0.0));
  Vec dh(h, 0.0), dpre(h);

  for (std::size_t t = T; t-- > 0;) {
    const StepCache& cc = caches[t];
    add_inplace(dh, d_out[t]);

    // relu subgradient at exactly 0 is 0
    for (std::size_t k = 0; k < h; ++k) dpre[k] = cc.pre[k] > 0.0 ? dh[k] : 0.0;

    outer_acc<double>(p.W_xh.grad, dpre, cc.x);
    outer_acc<double>(p.W_hh.grad, dpre, cc.h_prev);
    for (std::size_t k = 0; k < h; ++k) p.b.grad.data[k] += dpre[k];

    matvec_transposed_acc<double>(d_x[t], p.W_xh.value, dpre);
    std::fill(dh.begin(), dh.end(), 0.0);
    matvec_transposed_acc<double>(dh, p.W_hh.value, dpre);
  }
  return d_x;
}

std::vector<Vec> lstm_backward(LstmParams& p, std::span<const StepCache> caches,
                               const Vec& d_h_final) {
  const auto up = final_only_upstream(caches.size(), p.hidden_dim(), d_h_final);
  return lstm_backward(p, caches, up);
}

std::vector<Vec> gru_backward(GruParams& p, std::span<const StepCache> caches,
                              const Vec& d_h_final) {
  const auto up = final_only_upstream(caches.size(), p.hidden_dim(), d_h_final);
  return gru_backward(p, caches, up);
}

std::vector<Vec> irnn_backward(IrnnParams& p, std::span<const StepCache> caches,
                               const Vec& d_h_final) {
  const auto up = final_only_upstream(caches.size(), p.hidden_dim(), d_h_final);
  return irnn_backward(p, caches, up);
}

CellKind kind_of(const CellParams& params) {
  if (std::holds_alternative<LstmParams>(params)) return CellKind::lstm;
  if (std::holds_alternative<GruParams>(params)) return CellKind::gru;
  return CellKind::irnn;
}

std::size_t cell_input_dim(const CellParams& params) {
  return std::visit([](const auto& p) { return p.input_dim(); }, params);
}

std::size_t cell_hidden_dim(const CellParams& params) {
  return std::visit([](const auto& p) { return p.hidden_dim(); }, params);
}

CellParams make_cell_params(CellKind kind, std::size_t input_dim, std::size_t hidden_dim,
                            double irnn_scale, Rng& rng) {
  switch (kind) {
    case CellKind::lstm: return make_lstm_params(input_dim, hidden_dim, rng);
    case CellKind::gru: return make_gru_params(input_dim, hidden_dim, rng);
    case CellKind::irnn: return make_irnn_params(input_dim, hidden_dim, irnn_scale, rng);
  }
  throw ValidationError("bad cell kind");
}

void cell_step(const CellParams& params, std::span<const double> x, CellState& state,
               StepCache& cache) {
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LstmParams>)
          lstm_step(p, x, state, cache);
        else if constexpr (std::is_same_v<P, GruParams>)
          gru_step(p, x, state, cache);
        else
          irnn_step(p, x, state, cache);
      },
      params);
}

std::vector<Vec> cell_backward(CellParams& params, std::span<const StepCache> caches,
                               std::span<const Vec> d_out) {
  return std::visit(
      [&](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LstmParams>)
          return lstm_backward(p, caches, d_out);
        else if constexpr (std::is_same_v<P, GruParams>)
          return gru_backward(p, caches, d_out);
        else
          return irnn_backward(p, caches, d_out);
      },
      params);
}

std::size_t cell_param_count(const CellParams& params) {
  const std::size_t d = cell_input_dim(params);
  const std::size_t h = cell_hidden_dim(params);
  switch (kind_of(params)) {
    case CellKind::lstm: return lstm_param_count(d, h);
    case CellKind::gru: return gru_param_count(d, h);
    case CellKind::irnn: return irnn_param_count(d, h);
  }
  return 0;
}

}  // namespace splicernn
