#include "cyclr/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cyclr {

std::size_t EnvSpec::action_dim() const {
  if (const auto* d = std::get_if<DiscreteSpace>(&action_space)) return static_cast<std::size_t>(d->n);
  return std::get<BoxSpace>(action_space).low.size();
}

void EnvSpec::validate() const {
  if (max_episode_steps < 1) throw std::invalid_argument("max_episode_steps must be at least 1");
  if (const auto* box = std::get_if<BoxSpace>(&action_space)) {
    if (box->low.size() != box->high.size() || box->low.empty()) {
      throw std::invalid_argument("box bounds must be non-empty and of equal length");
    }
    for (std::size_t i = 0; i < box->low.size(); ++i) {
      if (!(box->low[i] < box->high[i])) throw std::invalid_argument("box bounds need low < high");
    }
  } else if (std::get<DiscreteSpace>(action_space).n < 1) {
    throw std::invalid_argument("discrete action space needs at least one action");
  }
}

std::vector<double> Env::reset(std::optional<std::uint64_t> seed) {
  if (seed) rng_ = Rng(*seed);
  elapsed_ = 0;
  finished_ = false;
  return do_reset();
}

Transition Env::step(const Action& action) {
  if (finished_) {
    throw std::logic_error("step() called on a finished episode; call reset() first");
  }
  Transition t = do_step(action);
  ++elapsed_;
  if (!t.done && elapsed_ >= spec().max_episode_steps) t.truncated = true;
  finished_ = t.done || t.truncated;
  return t;
}

// --- CartPole ---------------------------------------------------------------

CartPole::CartPole() {
  spec_.observation_dim = 4;
  spec_.action_space = DiscreteSpace{2};
  spec_.max_episode_steps = kMaxSteps;
  spec_.reward_min = 0.0;
  spec_.reward_max = 1.0;
}

void CartPole::set_state(const State& s) {
  reset();
  state_ = s;
}

CartPole::State CartPole::integrate(const State& s, int action) {
  constexpr double total_mass = kCartMass + kPoleMass;
  constexpr double polemass_length = kPoleMass * kHalfLength;
  const auto [x, x_dot, theta, theta_dot] = s;
  const double force = action == 1 ? kForceMag : -kForceMag;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double temp = (force + polemass_length * theta_dot * theta_dot * sin_t) / total_mass;
  const double theta_acc = (kGravity * sin_t - cos_t * temp) /
                           (kHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total_mass));
  const double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;
  return {x + kTau * x_dot, x_dot + kTau * x_acc, theta + kTau * theta_dot,
          theta_dot + kTau * theta_acc};
}

std::vector<double> CartPole::do_reset() {
  for (double& v : state_) v = rng_.uniform(-0.05, 0.05);
  return {state_.begin(), state_.end()};
}

Transition CartPole::do_step(const Action& action) {
  const int* a = std::get_if<int>(&action);
  if (a == nullptr || (*a != 0 && *a != 1)) {
    throw std::invalid_argument("CartPole expects discrete action 0 or 1");
  }
  state_ = integrate(state_, *a);
  Transition t;
  t.observation.assign(state_.begin(), state_.end());
  t.reward = 1.0;
  t.done = state_[0] < -kXThreshold || state_[0] > kXThreshold || state_[2] < -kThetaThreshold ||
           state_[2] > kThetaThreshold;
  return t;
}

// --- Pendulum ---------------------------------------------------------------

double angle_normalize(double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(x + std::numbers::pi, two_pi);
  if (r < 0.0) r += two_pi;
  return r - std::numbers::pi;
}

Pendulum::Pendulum() {
  spec_.observation_dim = 3;
  spec_.action_space = BoxSpace{{-kMaxTorque}, {kMaxTorque}};
  spec_.max_episode_steps = kMaxSteps;
  spec_.reward_min = -(std::numbers::pi * std::numbers::pi + 0.1 * kMaxSpeed * kMaxSpeed +
                       0.001 * kMaxTorque * kMaxTorque);
  spec_.reward_max = 0.0;
}

void Pendulum::set_state(double theta, double theta_dot) {
  reset();
  theta_ = theta;
  theta_dot_ = theta_dot;
}

std::vector<double> Pendulum::observe() const {
  return {std::cos(theta_), std::sin(theta_), theta_dot_};
}

std::vector<double> Pendulum::do_reset() {
  theta_ = rng_.uniform(-std::numbers::pi, std::numbers::pi);
  theta_dot_ = rng_.uniform(-1.0, 1.0);
  return observe();
}

Transition Pendulum::do_step(const Action& action) {
  const auto* a = std::get_if<std::vector<double>>(&action);
  if (a == nullptr || a->size() != 1) {
    throw std::invalid_argument("Pendulum expects a one-dimensional continuous action");
  }
  const double u = std::clamp((*a)[0], -kMaxTorque, kMaxTorque);
  const double th = angle_normalize(theta_);
  const double cost = th * th + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u;

  double new_theta_dot =
      theta_dot_ + (-3.0 * kGravity / (2.0 * kLength) * std::sin(theta_ + std::numbers::pi) +
                    3.0 / (kMass * kLength * kLength) * u) *
                       kDt;
  theta_ = theta_ + new_theta_dot * kDt;
  theta_dot_ = std::clamp(new_theta_dot, -kMaxSpeed, kMaxSpeed);

  Transition t;
  t.observation = observe();
  t.reward = -cost;
  return t;
}

// --- Tabular MDP ------------------------------------------------------------

namespace {

void check_distribution(std::span<const double> dist, const char* what) {
  double sum = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0)) throw std::invalid_argument(std::string(what) + " has a negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument(std::string(what) + " does not sum to 1");
  }
}

}  // namespace

void ChainMdp::validate() const {
  if (num_states < 1 || num_actions < 1 || horizon < 1) {
    throw std::invalid_argument("ChainMdp needs positive state/action counts and horizon");
  }
  const auto ns = static_cast<std::size_t>(num_states);
  const auto na = static_cast<std::size_t>(num_actions);
  if (transitions.size() != ns * na * ns || rewards.size() != ns * na || initial.size() != ns) {
    throw std::invalid_argument("ChainMdp table sizes do not match state/action counts");
  }
  for (std::size_t row = 0; row < ns * na; ++row) {
    check_distribution(std::span(transitions).subspan(row * ns, ns), "transition row");
  }
  check_distribution(initial, "initial distribution");
}

ChainMdp ChainMdp::chain(int num_states, double slip, int horizon) {
  ChainMdp m;
  m.num_states = num_states;
  m.num_actions = 2;
  m.horizon = horizon;
  m.transitions.assign(static_cast<std::size_t>(num_states) * 2 * num_states, 0.0);
  m.rewards.assign(static_cast<std::size_t>(num_states) * 2, 0.0);
  m.initial.assign(num_states, 0.0);
  m.initial[0] = 1.0;
  for (int s = 0; s < num_states; ++s) {
    m.p(s, 0, std::max(s - 1, 0)) += 1.0;
    const int right = std::min(s + 1, num_states - 1);
    m.p(s, 1, right) += 1.0 - slip;
    m.p(s, 1, s) += slip;
  }
  m.rewards[static_cast<std::size_t>(num_states - 1) * 2 + 0] = 1.0;
  m.rewards[static_cast<std::size_t>(num_states - 1) * 2 + 1] = 1.0;
  m.validate();
  return m;
}

PolicyTable PolicyTable::uniform(int num_states, int num_actions) {
  return {num_states, num_actions,
          std::vector<double>(static_cast<std::size_t>(num_states) * num_actions,
                              1.0 / num_actions)};
}

double trajectory_probability(const ChainMdp& mdp, const PolicyTable& policy,
                              const Trajectory& trajectory) {
  if (policy.num_states != mdp.num_states || policy.num_actions != mdp.num_actions ||
      policy.probs.size() != static_cast<std::size_t>(mdp.num_states) * mdp.num_actions) {
    throw std::invalid_argument("policy table does not match the MDP");
  }
  const auto& s = trajectory.states;
  const auto& a = trajectory.actions;
  if (s.empty() || s.size() != a.size() + 1) {
    throw std::invalid_argument("trajectory needs exactly one more state than actions");
  }
  for (int x : s) {
    if (x < 0 || x >= mdp.num_states) throw std::invalid_argument("trajectory state out of range");
  }
  for (int x : a) {
    if (x < 0 || x >= mdp.num_actions) throw std::invalid_argument("trajectory action out of range");
  }
  double prob = mdp.initial[s[0]];
  for (std::size_t t = 0; t < a.size(); ++t) {
    prob *= mdp.p(s[t], a[t], s[t + 1]) * policy(s[t], a[t]);
  }
  return prob;
}

ChainEnv::ChainEnv(ChainMdp mdp) : mdp_(std::move(mdp)) {
  mdp_.validate();
  spec_.observation_dim = static_cast<std::size_t>(mdp_.num_states);
  spec_.action_space = DiscreteSpace{mdp_.num_actions};
  spec_.max_episode_steps = mdp_.horizon;
  spec_.reward_min = *std::min_element(mdp_.rewards.begin(), mdp_.rewards.end());
  spec_.reward_max = *std::max_element(mdp_.rewards.begin(), mdp_.rewards.end());
}

int ChainEnv::sample_from(std::span<const double> dist) {
  const double u = rng_.uniform(0.0, 1.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    acc += dist[i];
    if (u < acc && dist[i] > 0.0) return static_cast<int>(i);
  }
  for (std::size_t i = dist.size(); i-- > 0;) {
    if (dist[i] > 0.0) return static_cast<int>(i);
  }
  return 0;
}

std::vector<double> ChainEnv::observe() const {
  std::vector<double> obs(static_cast<std::size_t>(mdp_.num_states), 0.0);
  obs[state_] = 1.0;
  return obs;
}

std::vector<double> ChainEnv::do_reset() {
  state_ = sample_from(mdp_.initial);
  return observe();
}

Transition ChainEnv::do_step(const Action& action) {
  const int* a = std::get_if<int>(&action);
  if (a == nullptr || *a < 0 || *a >= mdp_.num_actions) {
    throw std::invalid_argument("chain environment expects a discrete action in range");
  }
  Transition t;
  t.reward = mdp_.reward(state_, *a);
  const std::size_t row = (static_cast<std::size_t>(state_) * mdp_.num_actions + *a) * mdp_.num_states;
  state_ = sample_from(std::span(mdp_.transitions).subspan(row, mdp_.num_states));
  t.observation = observe();
  return t;
}

bool is_known_env(std::string_view id) {
  return id == "cartpole" || id == "pendulum" || id == "chain";
}

std::unique_ptr<Env> make_env(std::string_view id) {
  if (id == "cartpole") return std::make_unique<CartPole>();
  if (id == "pendulum") return std::make_unique<Pendulum>();
  if (id == "chain") return std::make_unique<ChainEnv>(ChainMdp::chain(5, 0.1, 20));
  throw std::invalid_argument("unknown environment '" + std::string(id) + "'");
}

}  // namespace cyclr
