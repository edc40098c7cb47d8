#pragma once

#include <cstdint>
#include <vector>

#include "f2l/param_vector.hpp"

namespace f2l {

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  // Decoupled (AdamW-style) decay; ignored by sgd.
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimState {
  Gradients first_moment;
  Gradients second_moment;
  std::uint64_t step = 0;
};

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config = {}) : config_(config) {}

  // Applies one update to `params` using `grads` (which may come from a
  // different parameter copy, e.g. first-order MAML).
  void step(ParamVector& params, const Gradients& grads);
  // Uses the gradients accumulated on `params` themselves.
  void step(ParamVector& params) { step(params, gradients_of(params)); }

  const OptimizerConfig& config() const { return config_; }
  const OptimState& state() const { return state_; }

 private:
  OptimizerConfig config_;
  OptimState state_;
};

// One plain gradient step, returning new parameters: params - lr * grads.
ParamVector sgd_step(const ParamVector& params, const Gradients& grads, double learning_rate);

}  // namespace f2l
