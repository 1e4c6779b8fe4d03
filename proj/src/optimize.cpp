#include "cyclr/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cyclr {

namespace {

void check_shapes(std::size_t params, std::size_t grads, std::size_t state) {
  if (params != grads || params != state) {
    throw std::invalid_argument("optimizer shape mismatch: params " + std::to_string(params) +
                                ", grads " + std::to_string(grads) + ", state " +
                                std::to_string(state));
  }
}

}  // namespace

AdamState AdamState::zeros(std::size_t n, double beta2, double epsilon) {
  AdamState s;
  s.first_moment.assign(n, 0.0);
  s.second_moment.assign(n, 0.0);
  s.beta2 = beta2;
  s.epsilon = epsilon;
  return s;
}

SgdMomentumState SgdMomentumState::zeros(std::size_t n) {
  return SgdMomentumState{std::vector<double>(n, 0.0)};
}

StepResult<AdamState> adam_step(const AdamState& state, std::span<const double> params,
                                std::span<const double> grads, double lr, double beta1) {
  check_shapes(params.size(), grads.size(), state.first_moment.size());
  check_shapes(params.size(), grads.size(), state.second_moment.size());
  if (!(lr >= 0.0)) {
    throw std::invalid_argument("learning rate must be non-negative");
  }
  beta1 = std::clamp(beta1, 0.0, kMomentumCeiling);

  StepResult<AdamState> out{std::vector<double>(params.begin(), params.end()), state};
  AdamState& s = out.state;
  s.t += 1;
  s.beta1_product *= beta1;
  const double bias1 = 1.0 - s.beta1_product;
  const double bias2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  const double b2 = s.beta2;

  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    s.first_moment[i] = beta1 * s.first_moment[i] + (1.0 - beta1) * g;
    s.second_moment[i] = b2 * s.second_moment[i] + (1.0 - b2) * g * g;
    const double m_hat = s.first_moment[i] / bias1;
    const double v_hat = s.second_moment[i] / bias2;
    out.params[i] -= lr * m_hat / (std::sqrt(v_hat) + s.epsilon);
  }
  return out;
}

StepResult<SgdMomentumState> sgd_momentum_step(const SgdMomentumState& state,
                                               std::span<const double> params,
                                               std::span<const double> grads, double lr,
                                               double mu) {
  check_shapes(params.size(), grads.size(), state.velocity.size());
  if (!(mu >= 0.0 && mu < 1.0)) {
    throw std::invalid_argument("SGD momentum must lie in [0, 1)");
  }
  StepResult<SgdMomentumState> out{std::vector<double>(params.begin(), params.end()), state};
  for (std::size_t i = 0; i < params.size(); ++i) {
    out.state.velocity[i] = mu * out.state.velocity[i] + grads[i];
    out.params[i] -= lr * out.state.velocity[i];
  }
  return out;
}

double l2_norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

std::vector<double> clip_global_norm(std::span<const double> grads, double max_norm) {
  if (!(max_norm > 0.0)) {
    throw std::invalid_argument("max_norm must be positive");
  }
  std::vector<double> out(grads.begin(), grads.end());
  const double norm = l2_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : out) g *= scale;
  }
  return out;
}

OptimizerState make_optimizer_state(OptimizerKind kind, std::size_t n, double beta2,
                                    double epsilon) {
  if (kind == OptimizerKind::sgd) return SgdMomentumState::zeros(n);
  return AdamState::zeros(n, beta2, epsilon);
}

void apply_step(OptimizerState& state, std::vector<double>& params, std::span<const double> grads,
                double lr, double momentum) {
  const double m = std::min(momentum, kMomentumCeiling);
  if (auto* adam = std::get_if<AdamState>(&state)) {
    auto r = adam_step(*adam, params, grads, lr, m);
    params = std::move(r.params);
    *adam = std::move(r.state);
  } else {
    auto& sgd = std::get<SgdMomentumState>(state);
    auto r = sgd_momentum_step(sgd, params, grads, lr, m);
    params = std::move(r.params);
    sgd = std::move(r.state);
  }
}

}  // namespace cyclr
