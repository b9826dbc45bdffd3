#include "splicernn/optim.hpp"

#include <cmath>
#include <string>

#include "splicernn/errors.hpp"

namespace splicernn {

namespace {

void check_finite_grads(std::span<Tensor* const> params) {
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!params[i]->grad.all_finite())
      throw NumericError("non-finite gradient in parameter " + std::to_string(i));
}

void check_state_shapes(std::span<Tensor* const> params, const std::vector<Matrix>& bufs,
                        const char* what) {
  if (params.size() != bufs.size())
    throw ValidationError(std::string(what) + ": state tracks " + std::to_string(bufs.size()) +
                          " parameters, got " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!params[i]->value.same_shape(bufs[i]))
      throw ValidationError(std::string(what) + ": shape mismatch at parameter " +
                            std::to_string(i));
}

}  // namespace

std::string_view optimizer_kind_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::rmsprop: return "rmsprop";
    case OptimizerKind::sgd: return "sgd";
  }
  return "?";
}

OptimizerKind optimizer_kind_from_name(std::string_view name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "rmsprop") return OptimizerKind::rmsprop;
  if (name == "sgd") return OptimizerKind::sgd;
  throw ValidationError("unknown optimizer '" + std::string(name) +
                        "' (expected adam|rmsprop|sgd)");
}

AdamState AdamState::for_params(std::span<Tensor* const> params, double alpha, double beta1,
                                double beta2, double epsilon) {
  AdamState s;
  s.alpha = alpha;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const Tensor* t : params) {
    s.m.emplace_back(t->value.rows, t->value.cols);
    s.v.emplace_back(t->value.rows, t->value.cols);
  }
  return s;
}

RmspropState RmspropState::for_params(std::span<Tensor* const> params, double alpha, double rho,
                                      double epsilon) {
  RmspropState s;
  s.alpha = alpha;
  s.rho = rho;
  s.epsilon = epsilon;
  s.sq.reserve(params.size());
  for (const Tensor* t : params) s.sq.emplace_back(t->value.rows, t->value.cols);
  return s;
}

void adam_step(AdamState& state, std::span<Tensor* const> params) {
  check_state_shapes(params, state.m, "adam");
  check_finite_grads(params);

  state.t += 1;
  const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad.data[k];
      m.data[k] = state.beta1 * m.data[k] + (1.0 - state.beta1) * g;
      v.data[k] = state.beta2 * v.data[k] + (1.0 - state.beta2) * g * g;
      const double m_hat = m.data[k] / bias1;
      const double v_hat = v.data[k] / bias2;
      p.value.data[k] -= state.alpha * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void rmsprop_step(RmspropState& state, std::span<Tensor* const> params) {
  check_state_shapes(params, state.sq, "rmsprop");
  check_finite_grads(params);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    Matrix& s = state.sq[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad.data[k];
      s.data[k] = state.rho * s.data[k] + (1.0 - state.rho) * g * g;
      p.value.data[k] -= state.alpha * g / (std::sqrt(s.data[k]) + state.epsilon);
    }
  }
}

void sgd_step(std::span<Tensor* const> params, double alpha) {
  check_finite_grads(params);
  for (Tensor* p : params)
    for (std::size_t k = 0; k < p->value.size(); ++k)
      p->value.data[k] -= alpha * p->grad.data[k];
}

Optimizer::Optimizer(const OptimizerConfig& config, std::span<Tensor* const> params)
    : config_(config) {
  switch (config.kind) {
    case OptimizerKind::adam:
      state_ = AdamState::for_params(params, config.alpha, config.beta1, config.beta2,
                                     config.epsilon);
      break;
    case OptimizerKind::rmsprop:
      state_ = RmspropState::for_params(params, config.alpha, config.rho, config.epsilon);
      break;
    case OptimizerKind::sgd:
      state_ = std::monostate{};
      break;
  }
}

void Optimizer::step(std::span<Tensor* const> params) {
  switch (config_.kind) {
    case OptimizerKind::adam:
      adam_step(std::get<AdamState>(state_), params);
      break;
    case OptimizerKind::rmsprop:
      rmsprop_step(std::get<RmspropState>(state_), params);
      break;
    case OptimizerKind::sgd:
      sgd_step(params, config_.alpha);
      break;
  }
}

}  // namespace splicernn
