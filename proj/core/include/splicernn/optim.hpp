#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "splicernn/matrix.hpp"

namespace splicernn {

enum class OptimizerKind { adam, rmsprop, sgd };

std::string_view optimizer_kind_name(OptimizerKind kind);
OptimizerKind optimizer_kind_from_name(std::string_view name);

// First/second-moment accumulators, one per parameter tensor, in the same
// order as the parameter list they were built from.
struct AdamState {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t t = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;

  static AdamState for_params(std::span<Tensor* const> params, double alpha = 1e-3,
                              double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);
};

struct RmspropState {
  double alpha = 1e-3;
  double rho = 0.9;
  double epsilon = 1e-8;
  std::vector<Matrix> sq;  // decayed mean of squared gradients

  static RmspropState for_params(std::span<Tensor* const> params, double alpha = 1e-3,
                                 double rho = 0.9, double epsilon = 1e-8);
};

// t <- t+1; m <- b1 m + (1-b1) g; v <- b2 v + (1-b2) g^2;
// theta <- theta - alpha * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
// Non-finite gradients fail fast with NumericError.
void adam_step(AdamState& state, std::span<Tensor* const> params);

// s <- rho s + (1-rho) g^2; theta <- theta - alpha * g / (sqrt(s) + eps)
void rmsprop_step(RmspropState& state, std::span<Tensor* const> params);

// theta <- theta - alpha * g
void sgd_step(std::span<Tensor* const> params, double alpha);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rho = 0.9;
  double epsilon = 1e-8;
};

// Thin dispatcher holding whichever state the configured rule needs.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(const OptimizerConfig& config, std::span<Tensor* const> params);

  void step(std::span<Tensor* const> params);

  const OptimizerConfig& config() const { return config_; }
  AdamState* adam() { return std::get_if<AdamState>(&state_); }
  const AdamState* adam() const { return std::get_if<AdamState>(&state_); }
  RmspropState* rmsprop() { return std::get_if<RmspropState>(&state_); }
  const RmspropState* rmsprop() const { return std::get_if<RmspropState>(&state_); }

 private:
  OptimizerConfig config_;
  std::variant<std::monostate, AdamState, RmspropState> state_;
};

}  // namespace splicernn
