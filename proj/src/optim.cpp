#include "f2l/optim.hpp"

#include <cmath>

#include "f2l/error.hpp"

namespace f2l {

namespace {

void check_grads(const ParamVector& params, const Gradients& grads) {
  if (grads.size() != params.size()) {
    throw ShapeError("optimizer: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i].size()) {
      throw ShapeError("optimizer: gradient size mismatch for " + params.name(i));
    }
    for (double g : grads[i]) {
      if (!std::isfinite(g)) {
        throw NumericError("optimizer: non-finite gradient for parameter " + params.name(i));
      }
    }
  }
}

}  // namespace

void Optimizer::step(ParamVector& params, const Gradients& grads) {
  check_grads(params, grads);
  const double lr = config_.learning_rate;

  if (config_.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i].mutable_values();
      for (std::size_t j = 0; j < p.size(); ++j) p[j] -= lr * grads[i][j];
    }
    ++state_.step;
    return;
  }

  if (state_.first_moment.empty()) {
    for (const auto& g : grads) {
      state_.first_moment.emplace_back(g.size(), 0.0);
      state_.second_moment.emplace_back(g.size(), 0.0);
    }
  } else if (state_.first_moment.size() != params.size()) {
    throw ShapeError("optimizer: parameter count changed between steps");
  }
  ++state_.step;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state_.step));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state_.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].mutable_values();
    auto& m = state_.first_moment[i];
    auto& v = state_.second_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double g = grads[i][j];
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      p[j] -= lr * (m_hat / (std::sqrt(v_hat) + config_.epsilon) + config_.weight_decay * p[j]);
    }
  }
}

ParamVector sgd_step(const ParamVector& params, const Gradients& grads, double learning_rate) {
  check_grads(params, grads);
  ParamVector out = params.clone();
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto p = out[i].mutable_values();
    for (std::size_t j = 0; j < p.size(); ++j) p[j] -= learning_rate * grads[i][j];
  }
  return out;
}

}  // namespace f2l
