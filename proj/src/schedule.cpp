#include "cyclr/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cyclr {

namespace {

// Position inside the current cycle: 0 at the lower bound, 1 at the peak.
double waveform_weight(std::uint64_t step, std::uint64_t stepsize) {
  const std::uint64_t phase = step % (2 * stepsize);
  const std::uint64_t leg = phase <= stepsize ? phase : 2 * stepsize - phase;
  return static_cast<double>(leg) / static_cast<double>(stepsize);
}

// Convex combination; exact at w == 0 and w == 1.
double interpolate(double lo, double hi, double w) {
  return std::clamp(lo * (1.0 - w) + hi * w, lo, hi);
}

}  // namespace

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::constant:
      return "constant";
    case PolicyKind::triangular:
      return "triangular";
    case PolicyKind::exp_range:
      return "exp_range";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view text) {
  if (text == "constant") return PolicyKind::constant;
  if (text == "triangular") return PolicyKind::triangular;
  if (text == "exp_range") return PolicyKind::exp_range;
  throw std::invalid_argument("unknown schedule policy '" + std::string(text) + "'");
}

SchedulePolicy SchedulePolicy::constant(double eta) {
  SchedulePolicy p;
  p.kind = PolicyKind::constant;
  p.eta_fixed = eta;
  p.eta_min_0 = eta;
  p.eta_max_0 = eta;
  p.validate();
  return p;
}

SchedulePolicy SchedulePolicy::triangular(double eta_min, double eta_max, std::uint64_t stepsize) {
  SchedulePolicy p;
  p.kind = PolicyKind::triangular;
  p.eta_min_0 = eta_min;
  p.eta_max_0 = eta_max;
  p.stepsize = stepsize;
  p.validate();
  return p;
}

SchedulePolicy SchedulePolicy::exp_range(double eta_min, double eta_max, std::uint64_t stepsize,
                                         double lambda) {
  SchedulePolicy p;
  p.kind = PolicyKind::exp_range;
  p.eta_min_0 = eta_min;
  p.eta_max_0 = eta_max;
  p.stepsize = stepsize;
  p.lambda = lambda;
  p.validate();
  return p;
}

void SchedulePolicy::validate() const {
  if (kind == PolicyKind::constant) {
    if (!(eta_fixed > 0.0) || !std::isfinite(eta_fixed)) {
      throw std::invalid_argument("constant learning rate must be positive and finite");
    }
    return;
  }
  if (!(eta_min_0 > 0.0) || !(eta_min_0 <= eta_max_0) || !std::isfinite(eta_max_0)) {
    throw std::invalid_argument("learning-rate bounds must satisfy 0 < eta_min <= eta_max");
  }
  if (stepsize < 1) {
    throw std::invalid_argument("stepsize must be at least 1");
  }
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("decay factor must lie in (0, 1]");
  }
}

void MomentumCycle::validate() const {
  if (!(0.0 <= m_min && m_min <= m_max && m_max <= 1.0)) {
    throw std::invalid_argument("momentum bounds must satisfy 0 <= m_min <= m_max <= 1");
  }
}

std::uint64_t cycle_index(std::uint64_t step, std::uint64_t stepsize) {
  if (stepsize < 1) {
    throw std::invalid_argument("stepsize must be at least 1");
  }
  return step / (2 * stepsize);
}

LrBounds bounds_at_cycle(const SchedulePolicy& policy, std::uint64_t k_cycle) {
  LrBounds bounds{policy.eta_min_0, policy.eta_max_0};
  switch (policy.kind) {
    case PolicyKind::constant:
      throw std::invalid_argument("constant policy has no cycle bounds");
    case PolicyKind::triangular:
      return bounds;
    case PolicyKind::exp_range:
      if (policy.lambda == 1.0) return bounds;
      for (std::uint64_t k = 0; k < k_cycle && bounds.eta_max > 0.0; ++k) {
        bounds.eta_min *= policy.lambda;
        bounds.eta_max *= policy.lambda;
      }
      return bounds;
  }
  return bounds;
}

double lr_at(const SchedulePolicy& policy, std::uint64_t step) {
  if (policy.kind == PolicyKind::constant) {
    return policy.eta_fixed;
  }
  const LrBounds b = bounds_at_cycle(policy, cycle_index(step, policy.stepsize));
  return interpolate(b.eta_min, b.eta_max, waveform_weight(step, policy.stepsize));
}

double momentum_at(const SchedulePolicy& policy, const MomentumCycle& cycle, std::uint64_t step) {
  if (policy.kind == PolicyKind::constant) {
    throw std::invalid_argument("momentum cycling requires a cyclical policy");
  }
  if (!cycle.enabled) {
    return cycle.m_max;
  }
  const LrBounds b = bounds_at_cycle(policy, cycle_index(step, policy.stepsize));
  if (b.eta_max == b.eta_min) {
    throw std::invalid_argument("momentum cycling is undefined for eta_min == eta_max");
  }
  const double frac = (lr_at(policy, step) - b.eta_min) / (b.eta_max - b.eta_min);
  return std::clamp(cycle.m_max * (1.0 - frac) + cycle.m_min * frac, cycle.m_min, cycle.m_max);
}

}  // namespace cyclr
