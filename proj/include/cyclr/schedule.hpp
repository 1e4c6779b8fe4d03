#pragma once

#include <cstdint>
#include <string_view>

namespace cyclr {

enum class PolicyKind { constant, triangular, exp_range };

std::string_view to_string(PolicyKind kind);
/// Accepts "constant", "triangular", "exp_range". Throws std::invalid_argument otherwise.
PolicyKind parse_policy_kind(std::string_view text);

/// Learning-rate policy description. The triangular waveform starts every
/// cycle at the lower bound, peaks after `stepsize` updates and returns to the
/// lower bound after `2 * stepsize` updates.
struct SchedulePolicy {
  PolicyKind kind = PolicyKind::constant;
  double eta_fixed = 1e-3;   // constant only
  double eta_min_0 = 1e-4;
  double eta_max_0 = 1e-2;
  std::uint64_t stepsize = 2000;
  double lambda = 1.0;       // exp_range only

  static SchedulePolicy constant(double eta);
  static SchedulePolicy triangular(double eta_min, double eta_max, std::uint64_t stepsize);
  static SchedulePolicy exp_range(double eta_min, double eta_max, std::uint64_t stepsize,
                                  double lambda);

  /// Throws std::invalid_argument when an invariant does not hold.
  void validate() const;

  bool operator==(const SchedulePolicy&) const = default;
};

/// Momentum counter-cycling: momentum sits at m_max while the learning rate is
/// at its lower bound and at m_min while it is at its upper bound.
struct MomentumCycle {
  bool enabled = false;
  double m_min = 0.8;
  double m_max = 1.0;

  void validate() const;

  bool operator==(const MomentumCycle&) const = default;
};

struct LrBounds {
  double eta_min;
  double eta_max;

  bool operator==(const LrBounds&) const = default;
};

/// floor(step / (2 * stepsize)). Throws if stepsize is zero.
std::uint64_t cycle_index(std::uint64_t step, std::uint64_t stepsize);

/// Bounds in effect during cycle `k_cycle`. exp_range bounds are the initial
/// bounds multiplied by lambda once per elapsed cycle, so that
/// bounds(k) == bounds(k - 1) * lambda holds bit for bit.
/// Throws std::invalid_argument for constant policies.
LrBounds bounds_at_cycle(const SchedulePolicy& policy, std::uint64_t k_cycle);

double lr_at(const SchedulePolicy& policy, std::uint64_t step);

/// Linear in the learning rate: m_max at the cycle's lower bound, m_min at its
/// upper bound. Returns m_max when the cycle is disabled.
/// Throws for constant policies and for degenerate bounds (eta_min == eta_max).
double momentum_at(const SchedulePolicy& policy, const MomentumCycle& cycle, std::uint64_t step);

}  // namespace cyclr
