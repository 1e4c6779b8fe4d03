#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "cyclr/common.hpp"

namespace cyclr {

struct DiscreteSpace {
  int n;
};

struct BoxSpace {
  std::vector<double> low;
  std::vector<double> high;
};

using ActionSpace = std::variant<DiscreteSpace, BoxSpace>;

struct EnvSpec {
  std::size_t observation_dim = 0;
  ActionSpace action_space = DiscreteSpace{1};
  int max_episode_steps = 1;
  double reward_min = 0.0;
  double reward_max = 0.0;

  bool discrete() const { return std::holds_alternative<DiscreteSpace>(action_space); }
  /// Number of discrete actions, or the dimension of the continuous action.
  std::size_t action_dim() const;
  void validate() const;
};

struct Transition {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;       // terminal state reached
  bool truncated = false;  // time limit reached
};

/// Episodic environment. reset() must be called before the first step and
/// after every done or truncated transition; stepping a finished episode throws
/// std::logic_error.
class Env {
 public:
  virtual ~Env() = default;

  virtual const EnvSpec& spec() const = 0;
  /// Passing a seed reseeds the environment's generator; without one the
  /// existing stream continues.
  std::vector<double> reset(std::optional<std::uint64_t> seed = std::nullopt);
  Transition step(const Action& action);

  int elapsed_steps() const { return elapsed_; }
  bool finished() const { return finished_; }

 protected:
  virtual std::vector<double> do_reset() = 0;
  /// Applies the action and reports reward and termination; truncation at
  /// the spec's time limit is handled by the base class.
  virtual Transition do_step(const Action& action) = 0;

  Rng rng_{0};

 private:
  int elapsed_ = 0;
  bool finished_ = true;
};

/// Classic cart-pole balancing task with Euler integration and a 200-step limit.
class CartPole final : public Env {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kCartMass = 1.0;
  static constexpr double kPoleMass = 0.1;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kForceMag = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kXThreshold = 2.4;
  static constexpr double kThetaThreshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
  static constexpr int kMaxSteps = 200;
  static constexpr double kSolvedReward = 195.0;

  /// x, x_dot, theta, theta_dot
  using State = std::array<double, 4>;

  CartPole();
  const EnvSpec& spec() const override { return spec_; }

  const State& state() const { return state_; }
  /// Places the system at an arbitrary state and starts a fresh episode there.
  void set_state(const State& s);

  /// One Euler step of the cart-pole equations of motion.
  static State integrate(const State& s, int action);

 protected:
  std::vector<double> do_reset() override;
  Transition do_step(const Action& action) override;

 private:
  EnvSpec spec_;
  State state_{};
};

/// Torque-controlled inverted pendulum. The angle is 0 when upright.
/// Observation is (cos theta, sin theta, theta_dot).
class Pendulum final : public Env {
 public:
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;
  static constexpr double kDt = 0.05;
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr int kMaxSteps = 200;

  Pendulum();
  const EnvSpec& spec() const override { return spec_; }

  double theta() const { return theta_; }
  double theta_dot() const { return theta_dot_; }
  void set_state(double theta, double theta_dot);

 protected:
  std::vector<double> do_reset() override;
  Transition do_step(const Action& action) override;

 private:
  std::vector<double> observe() const;

  EnvSpec spec_;
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
};

/// Wraps an angle into [-pi, pi).
double angle_normalize(double x);

/// Finite tabular MDP used for exact trajectory-probability checks.
struct ChainMdp {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> transitions;  // [s][a][s'] row-major
  std::vector<double> rewards;      // [s][a]
  std::vector<double> initial;      // rho_0 over states
  int horizon = 1;

  double p(int s, int a, int next) const {
    return transitions[(static_cast<std::size_t>(s) * num_actions + a) * num_states + next];
  }
  double& p(int s, int a, int next) {
    return transitions[(static_cast<std::size_t>(s) * num_actions + a) * num_states + next];
  }
  double reward(int s, int a) const { return rewards[static_cast<std::size_t>(s) * num_actions + a]; }

  /// Throws std::invalid_argument unless every distribution sums to 1 within 1e-12.
  void validate() const;

  /// n-state chain starting in state 0. Action 1 moves right with probability
  /// 1 - slip (otherwise stays), action 0 moves left. Reward 1 for acting in
  /// the rightmost state.
  static ChainMdp chain(int num_states, double slip, int horizon);
};

/// pi(a|s) as a row-major [s][a] table.
struct PolicyTable {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> probs;

  double operator()(int s, int a) const { return probs[static_cast<std::size_t>(s) * num_actions + a]; }
  static PolicyTable uniform(int num_states, int num_actions);
};

/// States s_0..s_T and actions a_0..a_{T-1}.
struct Trajectory {
  std::vector<int> states;
  std::vector<int> actions;
};

/// rho_0(s_0) * prod_t P(s_{t+1} | s_t, a_t) * pi(a_t | s_t).
/// Throws std::invalid_argument for malformed trajectories or mismatched tables.
double trajectory_probability(const ChainMdp& mdp, const PolicyTable& policy,
                              const Trajectory& trajectory);

/// Samples a ChainMdp. Observations are one-hot state encodings.
class ChainEnv final : public Env {
 public:
  explicit ChainEnv(ChainMdp mdp);
  const EnvSpec& spec() const override { return spec_; }
  int current_state() const { return state_; }
  const ChainMdp& mdp() const { return mdp_; }

 protected:
  std::vector<double> do_reset() override;
  Transition do_step(const Action& action) override;

 private:
  int sample_from(std::span<const double> dist);
  std::vector<double> observe() const;

  ChainMdp mdp_;
  EnvSpec spec_;
  int state_ = 0;
};

/// "cartpole", "pendulum" or "chain". Throws std::invalid_argument otherwise.
std::unique_ptr<Env> make_env(std::string_view id);
bool is_known_env(std::string_view id);

}  // namespace cyclr
