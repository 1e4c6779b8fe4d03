#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace cyclr {

/// Upper limit applied to a scheduled momentum before it is used as Adam's
/// beta1 or as the SGD velocity decay. A literal 1.0 never forgets old
/// gradients.
inline constexpr double kMomentumCeiling = 0.999;

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t t = 0;
  // Running product of the beta1 values used so far. beta1 changes from step
  // to step under momentum cycling, so bias correction uses 1 - prod(beta1)
  // instead of 1 - beta1^t. The two agree when beta1 is held fixed.
  double beta1_product = 1.0;
  double beta2 = 0.999;
  double epsilon = 1e-5;

  static AdamState zeros(std::size_t n, double beta2 = 0.999, double epsilon = 1e-5);

  bool operator==(const AdamState&) const = default;
};

struct SgdMomentumState {
  std::vector<double> velocity;

  static SgdMomentumState zeros(std::size_t n);

  bool operator==(const SgdMomentumState&) const = default;
};

template <typename State>
struct StepResult {
  std::vector<double> params;
  State state;
};

/// Bias-corrected Adam descent step. beta1 is clamped into [0, kMomentumCeiling].
/// Throws std::invalid_argument on shape mismatch or a negative learning rate.
StepResult<AdamState> adam_step(const AdamState& state, std::span<const double> params,
                                std::span<const double> grads, double lr, double beta1);

/// velocity <- mu * velocity + grads; params <- params - lr * velocity.
/// Requires mu in [0, 1).
StepResult<SgdMomentumState> sgd_momentum_step(const SgdMomentumState& state,
                                               std::span<const double> params,
                                               std::span<const double> grads, double lr, double mu);

double l2_norm(std::span<const double> v);

/// Rescales to norm max_norm when the Euclidean norm exceeds it.
std::vector<double> clip_global_norm(std::span<const double> grads, double max_norm);

enum class OptimizerKind { adam, sgd };

using OptimizerState = std::variant<AdamState, SgdMomentumState>;

OptimizerState make_optimizer_state(OptimizerKind kind, std::size_t n, double beta2 = 0.999,
                                    double epsilon = 1e-5);

/// Dispatches to adam_step or sgd_momentum_step and writes the result back.
/// The momentum is clamped to kMomentumCeiling for both rules.
void apply_step(OptimizerState& state, std::vector<double>& params, std::span<const double> grads,
                double lr, double momentum);

}  // namespace cyclr
