#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cyclr/common.hpp"
#include "cyclr/envs.hpp"
#include "cyclr/nn.hpp"
#include "cyclr/optimize.hpp"
#include "cyclr/runlog.hpp"
#include "cyclr/schedule.hpp"

namespace cyclr {

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  int rollout_steps = 2048;  // per environment instance
  int n_envs = 1;
  int update_epochs = 4;
  int minibatch_size = 64;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.5;
  std::vector<std::size_t> hidden = {64, 64};

  OptimizerKind optimizer = OptimizerKind::adam;
  // Momentum used when the schedule does not cycle it (Adam beta1 or SGD mu).
  double base_momentum = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-5;

  /// Per-environment defaults: CartPole uses 8 instances x 128 steps,
  /// minibatches of 256 and no entropy bonus.
  static PpoConfig defaults_for(std::string_view env_id);

  std::size_t batch_size() const { return static_cast<std::size_t>(rollout_steps) * n_envs; }
  /// Throws std::invalid_argument when a field is out of range or the
  /// minibatch size does not divide the batch.
  void validate() const;
};

/// G_t = r_{t+1} + gamma * G_{t+1}, evaluated backwards from the end.
std::vector<double> discounted_return(std::span<const double> rewards, double gamma);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Generalized advantage estimation over one environment's sequence.
/// dones[t] marks that the episode ended with transition t, which cuts both
/// the bootstrap and the advantage recursion. `bootstrap_value` is V of the
/// state after the final step.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double gamma, double gae_lambda,
                      double bootstrap_value);

/// mean_i of -min(r_i * A_i, clip(r_i, 1 - eps, 1 + eps) * A_i).
double clipped_surrogate_loss(std::span<const double> ratios, std::span<const double> advantages,
                              double clip_epsilon);

/// (A - mean) / (std + 1e-8), population standard deviation.
std::vector<double> normalize_advantages(std::span<const double> advantages);

/// Fixed-size on-policy batch, laid out time-major: index = t * n_envs + env.
class RolloutBuffer {
 public:
  RolloutBuffer(int n_steps, int n_envs, std::size_t obs_dim, std::uint64_t generation = 0);

  void add(std::span<const double> obs, Action action, double reward, double value,
           double log_prob, bool done);

  /// Runs GAE per environment column. Throws std::logic_error when the buffer
  /// is not full, and std::invalid_argument for a wrong bootstrap count.
  void compute_advantages(double gamma, double gae_lambda,
                          std::span<const double> bootstrap_values);

  std::size_t size() const { return rewards_.size(); }
  std::size_t capacity() const { return static_cast<std::size_t>(n_steps_) * n_envs_; }
  bool complete() const { return size() == capacity(); }
  bool advantages_ready() const { return advantages_ready_; }
  bool consumed() const { return consumed_; }
  std::uint64_t generation() const { return generation_; }
  int n_steps() const { return n_steps_; }
  int n_envs() const { return n_envs_; }

  std::span<const double> observation(std::size_t i) const {
    return {observations_.data() + i * obs_dim_, obs_dim_};
  }
  const Action& action(std::size_t i) const { return actions_[i]; }
  std::span<const double> rewards() const { return rewards_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> log_probs() const { return log_probs_; }
  std::span<const std::uint8_t> dones() const { return dones_; }
  std::span<const double> advantages() const { return advantages_; }
  std::span<const double> returns() const { return returns_; }

  /// Marks the buffer as used by an update phase. Throws std::logic_error if
  /// it already was, or if advantages have not been computed.
  void mark_consumed();

 private:
  int n_steps_;
  int n_envs_;
  std::size_t obs_dim_;
  std::uint64_t generation_;
  std::vector<double> observations_;
  std::vector<Action> actions_;
  std::vector<double> rewards_;
  std::vector<double> values_;
  std::vector<double> log_probs_;
  std::vector<std::uint8_t> dones_;
  std::vector<double> advantages_;
  std::vector<double> returns_;
  bool advantages_ready_ = false;
  bool consumed_ = false;
};

/// Separate policy and value networks. Continuous policies add a
/// state-independent log-std vector, initialized to zero.
class ActorCritic {
 public:
  ActorCritic(const EnvSpec& spec, const std::vector<std::size_t>& hidden, Rng& rng);

  bool continuous() const { return continuous_; }
  const Mlp& policy_net() const { return policy_; }
  const Mlp& value_net() const { return value_; }
  const std::vector<double>& log_std() const { return log_std_; }

  DistParams distribution(std::span<const double> obs, Mlp::Cache* cache = nullptr) const;
  double value(std::span<const double> obs, Mlp::Cache* cache = nullptr) const;

  /// Policy network parameters followed by the log-std vector.
  std::vector<double> policy_params() const;
  void set_policy_params(std::span<const double> params);
  std::size_t num_policy_params() const { return policy_.num_params() + log_std_.size(); }

  std::span<const double> value_params() const { return value_.params(); }
  void set_value_params(std::span<const double> params);

  bool all_finite() const;

  void save(std::ostream& out) const;

  bool operator==(const ActorCritic&) const = default;

 private:
  bool continuous_ = false;
  Mlp policy_;
  Mlp value_;
  std::vector<double> log_std_;
};

struct LossEvaluation {
  double total = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  std::vector<double> policy_grad;  // layout of ActorCritic::policy_params()
  std::vector<double> value_grad;
};

/// Composite loss surrogate + value_coef * MSE(V, returns) - entropy_coef * H
/// on the selected samples, with its exact gradient. `advantages` are the
/// already-normalized advantages aligned with `indices`.
LossEvaluation evaluate_loss(const ActorCritic& model, const RolloutBuffer& buffer,
                             std::span<const std::size_t> indices,
                             std::span<const double> advantages, const PpoConfig& config);

struct UpdateMetrics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double total_loss = 0.0;
  int minibatch_steps = 0;
  bool diverged = false;
};

/// update_epochs passes of shuffled minibatches, each applying one optimizer
/// step with the same (lr, momentum). The joint policy+value gradient is
/// clipped to max_grad_norm before the step. Metrics are averaged over the
/// minibatch steps. On a non-finite loss or parameter the update stops,
/// the model is left at its last finite state and diverged is set.
UpdateMetrics ppo_update(RolloutBuffer& buffer, ActorCritic& model, OptimizerState& policy_opt,
                         OptimizerState& value_opt, double lr, double momentum,
                         const PpoConfig& config, Rng& rng);

struct EpisodeEnd {
  std::uint64_t env_step;
  double reward;
};

struct Rollout {
  RolloutBuffer buffer;
  std::vector<EpisodeEnd> episodes;
};

/// Owns the environments, model, optimizer states and random streams of one
/// seeded run. Everything is a deterministic function of (env id, config, seed).
class Trainer {
 public:
  Trainer(std::string env_id, PpoConfig config, std::uint64_t seed);

  /// Steps every environment instance rollout_steps times (instances in a
  /// fixed order) and computes advantages.
  Rollout collect_rollout();
  UpdateMetrics update(RolloutBuffer& buffer, double lr, double momentum);

  std::uint64_t env_steps() const { return env_steps_; }
  std::uint64_t updates() const { return updates_; }
  const ActorCritic& model() const { return model_; }
  const PpoConfig& config() const { return config_; }
  const std::string& env_id() const { return env_id_; }

 private:
  std::string env_id_;
  PpoConfig config_;
  std::vector<std::unique_ptr<Env>> envs_;
  std::vector<std::vector<double>> obs_;
  std::vector<double> episode_return_;
  Rng init_rng_;
  Rng action_rng_;
  Rng shuffle_rng_;
  ActorCritic model_;
  OptimizerState policy_opt_;
  OptimizerState value_opt_;
  std::uint64_t env_steps_ = 0;
  std::uint64_t updates_ = 0;
};

/// Momentum fed to the optimizer at an update: the scheduled momentum when
/// cycling is enabled on a cyclical policy, otherwise `base_momentum`.
double scheduled_momentum(const SchedulePolicy& policy, const MomentumCycle& cycle,
                          std::uint64_t update_index, double base_momentum);

/// Alternates rollouts and updates until at least total_steps environment
/// steps have been taken; the schedule is indexed by the update number.
/// Stops early with diverged=true on a non-finite loss or parameter.
RunLog train(std::string_view env_id, const SchedulePolicy& policy, const MomentumCycle& cycle,
             const PpoConfig& config, std::uint64_t seed, std::uint64_t total_steps);

}  // namespace cyclr
