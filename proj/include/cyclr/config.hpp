#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cyclr/ppo.hpp"
#include "cyclr/schedule.hpp"

namespace cyclr {

/// One schedule arm of an experiment.
struct Arm {
  std::string name;
  SchedulePolicy policy;
  MomentumCycle momentum;

  bool operator==(const Arm&) const = default;
};

/// Experiment description.
///
/// Text form, one `key = value` per line, `#` starts a comment:
///
///     preset      = paper-general        # replaces the arm list
///     env         = cartpole             # cartpole | pendulum | chain
///     seeds       = 1,2,3
///     total_steps = 200000
///     out         = runs/cartpole
///     jobs        = 3                    # parallel worker slots
///     arm.<name>.schedule       = constant | triangular | exp_range
///     arm.<name>.eta            = 0.001  # constant learning rate
///     arm.<name>.eta_min        = 0.0001
///     arm.<name>.eta_max        = 0.01
///     arm.<name>.stepsize       = 2000
///     arm.<name>.decay          = 0.99
///     arm.<name>.cycle_momentum = true
///     arm.<name>.momentum_min   = 0.8
///     arm.<name>.momentum_max   = 1.0
///     ppo.<field>               = value  # see apply_ppo_override
///
/// Arms keep the order in which their names first appear.
struct ExperimentConfig {
  std::string env_id = "cartpole";
  std::vector<Arm> arms;
  std::vector<std::uint64_t> seeds;
  std::uint64_t total_steps = 200000;
  std::vector<std::pair<std::string, std::string>> ppo_overrides;
  std::string out_dir = "runs";
  int jobs = 1;

  /// Throws std::invalid_argument: unknown env, no arms, no seeds,
  /// total_steps == 0, duplicate arm names, or an invalid arm/PPO setting.
  void validate() const;
  /// Environment defaults with the overrides applied.
  PpoConfig ppo_config() const;

  /// Triangular(1e-4, 1e-2, s=2000) and exp_range(same, lambda=0.99), both
  /// with momentum cycled between 0.8 and 1.0, plus a constant 1e-3 baseline.
  static ExperimentConfig paper_general();
};

std::vector<Arm> paper_general_arms();

/// Applies one `key = value` setting. Throws std::invalid_argument for an
/// unknown key or an unparsable value.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Keys: gamma, gae_lambda, clip_epsilon, rollout_steps, n_envs,
/// update_epochs, minibatch_size, value_coef, entropy_coef, max_grad_norm,
/// hidden (e.g. "64,64"), optimizer (adam | sgd), base_momentum, adam_beta2,
/// adam_epsilon.
void apply_ppo_override(PpoConfig& config, std::string_view key, std::string_view value);

/// Parses "key=value" lines; errors name `source` and the line number.
ExperimentConfig parse_experiment_config(std::istream& in, std::string_view source = "<config>");
ExperimentConfig load_experiment_config(const std::string& path);

// Strict scalar parsing shared with the CLI; throws std::invalid_argument.
double parse_number(std::string_view text);
std::uint64_t parse_unsigned(std::string_view text);
bool parse_bool(std::string_view text);

}  // namespace cyclr
