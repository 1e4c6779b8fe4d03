#include "cyclr/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace cyclr {

PpoConfig PpoConfig::defaults_for(std::string_view env_id) {
  PpoConfig c;
  if (env_id == "cartpole" || env_id == "chain") {
    c.rollout_steps = 128;
    c.n_envs = 8;
    c.minibatch_size = 256;
    c.entropy_coef = 0.0;
  }
  return c;
}

void PpoConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda must lie in [0, 1]");
  require(clip_epsilon > 0.0, "clip_epsilon must be positive");
  require(rollout_steps > 0, "rollout_steps must be positive");
  require(n_envs > 0, "n_envs must be positive");
  require(update_epochs > 0, "update_epochs must be positive");
  require(minibatch_size > 0, "minibatch_size must be positive");
  require(batch_size() % static_cast<std::size_t>(minibatch_size) == 0,
          "minibatch_size must divide rollout_steps * n_envs");
  require(value_coef >= 0.0 && entropy_coef >= 0.0, "loss coefficients must be non-negative");
  require(max_grad_norm > 0.0, "max_grad_norm must be positive");
  require(!hidden.empty() && std::all_of(hidden.begin(), hidden.end(), [](auto h) { return h > 0; }),
          "hidden layer sizes must be positive");
  require(base_momentum >= 0.0 && base_momentum < 1.0, "base_momentum must lie in [0, 1)");
  require(adam_beta2 > 0.0 && adam_beta2 < 1.0, "adam_beta2 must lie in (0, 1)");
  require(adam_epsilon > 0.0, "adam_epsilon must be positive");
}

std::vector<double> discounted_return(std::span<const double> rewards, double gamma) {
  std::vector<double> out(rewards.size());
  double g = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    g = rewards[t] + gamma * g;
    out[t] = g;
  }
  return out;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double gamma, double gae_lambda,
                      double bootstrap_value) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw std::invalid_argument("GAE inputs must have equal length");
  }
  GaeResult out{std::vector<double>(n), std::vector<double>(n)};
  double next_adv = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double next_value = t + 1 < n ? values[t + 1] : bootstrap_value;
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * live - values[t];
    next_adv = delta + gamma * gae_lambda * live * next_adv;
    out.advantages[t] = next_adv;
    out.returns[t] = next_adv + values[t];
  }
  return out;
}

double clipped_surrogate_loss(std::span<const double> ratios, std::span<const double> advantages,
                              double clip_epsilon) {
  if (ratios.size() != advantages.size()) {
    throw std::invalid_argument("ratios and advantages must have equal length");
  }
  if (ratios.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double r = ratios[i];
    const double a = advantages[i];
    const double clipped = std::clamp(r, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
    sum += -std::min(r * a, clipped * a);
  }
  return sum / static_cast<double>(ratios.size());
}

std::vector<double> normalize_advantages(std::span<const double> advantages) {
  const std::size_t n = advantages.size();
  std::vector<double> out(advantages.begin(), advantages.end());
  if (n == 0) return out;
  const double mean = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double a : out) var += (a - mean) * (a - mean);
  const double stddev = std::sqrt(var / static_cast<double>(n));
  for (double& a : out) a = (a - mean) / (stddev + 1e-8);
  return out;
}

// --- RolloutBuffer ----------------------------------------------------------

RolloutBuffer::RolloutBuffer(int n_steps, int n_envs, std::size_t obs_dim, std::uint64_t generation)
    : n_steps_(n_steps), n_envs_(n_envs), obs_dim_(obs_dim), generation_(generation) {
  if (n_steps < 1 || n_envs < 1) throw std::invalid_argument("rollout buffer needs positive size");
  const std::size_t cap = capacity();
  observations_.reserve(cap * obs_dim_);
  actions_.reserve(cap);
  rewards_.reserve(cap);
  values_.reserve(cap);
  log_probs_.reserve(cap);
  dones_.reserve(cap);
}

void RolloutBuffer::add(std::span<const double> obs, Action action, double reward, double value,
                        double log_prob, bool done) {
  if (complete()) throw std::logic_error("rollout buffer is full");
  if (obs.size() != obs_dim_) throw std::invalid_argument("observation size mismatch");
  observations_.insert(observations_.end(), obs.begin(), obs.end());
  actions_.push_back(std::move(action));
  rewards_.push_back(reward);
  values_.push_back(value);
  log_probs_.push_back(log_prob);
  dones_.push_back(done ? 1 : 0);
  advantages_ready_ = false;
}

void RolloutBuffer::compute_advantages(double gamma, double gae_lambda,
                                       std::span<const double> bootstrap_values) {
  if (!complete()) throw std::logic_error("cannot compute advantages on an incomplete buffer");
  if (bootstrap_values.size() != static_cast<std::size_t>(n_envs_)) {
    throw std::invalid_argument("need one bootstrap value per environment");
  }
  advantages_.assign(capacity(), 0.0);
  returns_.assign(capacity(), 0.0);
  const auto steps = static_cast<std::size_t>(n_steps_);
  const auto envs = static_cast<std::size_t>(n_envs_);
  std::vector<double> r(steps), v(steps);
  std::vector<std::uint8_t> d(steps);
  for (std::size_t e = 0; e < envs; ++e) {
    for (std::size_t t = 0; t < steps; ++t) {
      r[t] = rewards_[t * envs + e];
      v[t] = values_[t * envs + e];
      d[t] = dones_[t * envs + e];
    }
    const GaeResult g = compute_gae(r, v, d, gamma, gae_lambda, bootstrap_values[e]);
    for (std::size_t t = 0; t < steps; ++t) {
      advantages_[t * envs + e] = g.advantages[t];
      returns_[t * envs + e] = g.returns[t];
    }
  }
  advantages_ready_ = true;
}

void RolloutBuffer::mark_consumed() {
  if (!advantages_ready_) throw std::logic_error("advantages must be computed before an update");
  if (consumed_) {
    throw std::logic_error("rollout buffer generation " + std::to_string(generation_) +
                           " was already used for an update");
  }
  consumed_ = true;
}

// --- ActorCritic ------------------------------------------------------------

ActorCritic::ActorCritic(const EnvSpec& spec, const std::vector<std::size_t>& hidden, Rng& rng)
    : continuous_(!spec.discrete()) {
  std::vector<std::size_t> sizes{spec.observation_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  std::vector<std::size_t> policy_sizes = sizes;
  policy_sizes.push_back(spec.action_dim());
  std::vector<std::size_t> value_sizes = sizes;
  value_sizes.push_back(1);
  policy_ = Mlp::orthogonal(policy_sizes, std::sqrt(2.0), 0.01, rng);
  value_ = Mlp::orthogonal(value_sizes, std::sqrt(2.0), 1.0, rng);
  if (continuous_) log_std_.assign(spec.action_dim(), 0.0);
}

DistParams ActorCritic::distribution(std::span<const double> obs, Mlp::Cache* cache) const {
  Mlp::Cache local;
  Mlp::Cache& c = cache ? *cache : local;
  auto out = policy_.forward(obs, c);
  if (!continuous_) return Categorical{{out.begin(), out.end()}};
  DiagGaussian g{{out.begin(), out.end()}, log_std_};
  for (double& ls : g.log_std) ls = std::clamp(ls, kLogStdMin, kLogStdMax);
  return g;
}

double ActorCritic::value(std::span<const double> obs, Mlp::Cache* cache) const {
  Mlp::Cache local;
  Mlp::Cache& c = cache ? *cache : local;
  return value_.forward(obs, c)[0];
}

std::vector<double> ActorCritic::policy_params() const {
  std::vector<double> p(policy_.params().begin(), policy_.params().end());
  p.insert(p.end(), log_std_.begin(), log_std_.end());
  return p;
}

void ActorCritic::set_policy_params(std::span<const double> params) {
  if (params.size() != num_policy_params()) throw std::invalid_argument("policy parameter size mismatch");
  auto& net = policy_.mutable_params();
  std::copy_n(params.begin(), net.size(), net.begin());
  std::copy(params.begin() + static_cast<std::ptrdiff_t>(net.size()), params.end(), log_std_.begin());
}

void ActorCritic::set_value_params(std::span<const double> params) {
  auto& net = value_.mutable_params();
  if (params.size() != net.size()) throw std::invalid_argument("value parameter size mismatch");
  std::copy(params.begin(), params.end(), net.begin());
}

bool ActorCritic::all_finite() const {
  return policy_.all_finite() && value_.all_finite() &&
         std::all_of(log_std_.begin(), log_std_.end(), [](double x) { return std::isfinite(x); });
}

void ActorCritic::save(std::ostream& out) const {
  save_mlp(out, policy_);
  out << "log_std " << log_std_.size() << "\n";
  const auto old = out.precision(17);
  for (double x : log_std_) out << x << "\n";
  out.precision(old);
  save_mlp(out, value_);
}

// --- Loss -------------------------------------------------------------------

LossEvaluation evaluate_loss(const ActorCritic& model, const RolloutBuffer& buffer,
                             std::span<const std::size_t> indices,
                             std::span<const double> advantages, const PpoConfig& config) {
  if (indices.size() != advantages.size() || indices.empty()) {
    throw std::invalid_argument("loss needs a non-empty minibatch with one advantage per sample");
  }
  const double n = static_cast<double>(indices.size());
  const double eps = config.clip_epsilon;
  const std::size_t net_params = model.policy_net().num_params();

  LossEvaluation out;
  out.policy_grad.assign(model.num_policy_params(), 0.0);
  out.value_grad.assign(model.value_net().num_params(), 0.0);
  std::span<double> net_grad(out.policy_grad.data(), net_params);
  std::span<double> log_std_grad(out.policy_grad.data() + net_params, model.log_std().size());

  Mlp::Cache pcache;
  Mlp::Cache vcache;
  std::vector<double> head_grad;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    const double adv = advantages[k];
    const DistParams dist = model.distribution(buffer.observation(i), &pcache);
    const Action& action = buffer.action(i);
    const double logp = log_prob(dist, action);
    const double ratio = std::exp(logp - buffer.log_probs()[i]);
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    const double h = entropy(dist);

    out.policy_loss += -std::min(ratio * adv, clipped * adv) / n;
    out.entropy += h / n;
    out.approx_kl += (buffer.log_probs()[i] - logp) / n;
    if (std::abs(ratio - 1.0) > eps) out.clip_fraction += 1.0 / n;

    // d(loss)/d(logp) is -A * ratio / n while the unclipped branch is the minimum.
    const double dlogp = ratio * adv <= clipped * adv ? -adv * ratio / n : 0.0;
    head_grad = log_prob_grad(dist, action);
    for (double& g : head_grad) g *= dlogp;
    if (config.entropy_coef != 0.0) {
      const std::vector<double> dh = entropy_grad(dist);
      for (std::size_t j = 0; j < head_grad.size(); ++j) {
        head_grad[j] -= config.entropy_coef * dh[j] / n;
      }
    }
    const std::size_t out_dim = model.policy_net().output_dim();
    model.policy_net().backward_accumulate(pcache, std::span(head_grad).first(out_dim), net_grad);
    if (model.continuous()) {
      for (std::size_t j = 0; j < log_std_grad.size(); ++j) {
        const double ls = model.log_std()[j];
        if (ls > kLogStdMin && ls < kLogStdMax) log_std_grad[j] += head_grad[out_dim + j];
      }
    }

    const double v = model.value(buffer.observation(i), &vcache);
    const double err = v - buffer.returns()[i];
    out.value_loss += err * err / n;
    const double dv = config.value_coef * 2.0 * err / n;
    model.value_net().backward_accumulate(vcache, std::span(&dv, 1), out.value_grad);
  }
  out.total = out.policy_loss + config.value_coef * out.value_loss - config.entropy_coef * out.entropy;
  return out;
}

UpdateMetrics ppo_update(RolloutBuffer& buffer, ActorCritic& model, OptimizerState& policy_opt,
                         OptimizerState& value_opt, double lr, double momentum,
                         const PpoConfig& config, Rng& rng) {
  config.validate();
  if (buffer.size() % static_cast<std::size_t>(config.minibatch_size) != 0) {
    throw std::invalid_argument("minibatch_size must divide the buffer size");
  }
  buffer.mark_consumed();

  UpdateMetrics m;
  const std::size_t n = buffer.size();
  const auto mb = static_cast<std::size_t>(config.minibatch_size);
  std::vector<std::size_t> order(n);
  std::vector<double> adv(mb);
  std::vector<double> joint;

  for (int epoch = 0; epoch < config.update_epochs && !m.diverged; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t start = 0; start < n; start += mb) {
      std::span<const std::size_t> idx(order.data() + start, mb);
      for (std::size_t k = 0; k < mb; ++k) adv[k] = buffer.advantages()[idx[k]];
      adv = normalize_advantages(adv);

      LossEvaluation loss = evaluate_loss(model, buffer, idx, adv, config);
      if (!std::isfinite(loss.total)) {
        m.diverged = true;
        break;
      }

      joint = loss.policy_grad;
      joint.insert(joint.end(), loss.value_grad.begin(), loss.value_grad.end());
      joint = clip_global_norm(joint, config.max_grad_norm);
      const auto split = static_cast<std::ptrdiff_t>(loss.policy_grad.size());

      std::vector<double> policy_params = model.policy_params();
      std::vector<double> value_params(model.value_params().begin(), model.value_params().end());
      apply_step(policy_opt, policy_params, std::span(joint).first(static_cast<std::size_t>(split)),
                 lr, momentum);
      apply_step(value_opt, value_params, std::span(joint).subspan(static_cast<std::size_t>(split)),
                 lr, momentum);
      const bool finite =
          std::all_of(policy_params.begin(), policy_params.end(), [](double x) { return std::isfinite(x); }) &&
          std::all_of(value_params.begin(), value_params.end(), [](double x) { return std::isfinite(x); });
      if (!finite) {
        m.diverged = true;
        break;
      }
      model.set_policy_params(policy_params);
      model.set_value_params(value_params);

      m.policy_loss += loss.policy_loss;
      m.value_loss += loss.value_loss;
      m.entropy += loss.entropy;
      m.approx_kl += loss.approx_kl;
      m.clip_fraction += loss.clip_fraction;
      m.total_loss += loss.total;
      ++m.minibatch_steps;
    }
  }
  if (m.minibatch_steps > 0) {
    const double k = m.minibatch_steps;
    m.policy_loss /= k;
    m.value_loss /= k;
    m.entropy /= k;
    m.approx_kl /= k;
    m.clip_fraction /= k;
    m.total_loss /= k;
  }
  if (m.diverged) {
    m.total_loss = std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

// --- Trainer ----------------------------------------------------------------

namespace {

EnvSpec validated_spec(const std::string& env_id, const PpoConfig& config) {
  config.validate();
  return make_env(env_id)->spec();
}

}  // namespace

Trainer::Trainer(std::string env_id, PpoConfig config, std::uint64_t seed)
    : env_id_(std::move(env_id)),
      config_(std::move(config)),
      init_rng_(derive_seed(seed, 0)),
      action_rng_(derive_seed(seed, 1)),
      shuffle_rng_(derive_seed(seed, 2)),
      model_(validated_spec(env_id_, config_), config_.hidden, init_rng_),
      policy_opt_(make_optimizer_state(config_.optimizer, model_.num_policy_params(),
                                       config_.adam_beta2, config_.adam_epsilon)),
      value_opt_(make_optimizer_state(config_.optimizer, model_.value_net().num_params(),
                                      config_.adam_beta2, config_.adam_epsilon)) {
  for (int e = 0; e < config_.n_envs; ++e) {
    envs_.push_back(make_env(env_id_));
    obs_.push_back(envs_.back()->reset(derive_seed(seed, 100 + static_cast<std::uint64_t>(e))));
    episode_return_.push_back(0.0);
  }
}

Rollout Trainer::collect_rollout() {
  const std::size_t obs_dim = envs_.front()->spec().observation_dim;
  Rollout out{RolloutBuffer(config_.rollout_steps, config_.n_envs, obs_dim, updates_), {}};
  Mlp::Cache cache;
  for (int t = 0; t < config_.rollout_steps; ++t) {
    for (int e = 0; e < config_.n_envs; ++e) {
      const DistParams dist = model_.distribution(obs_[e], &cache);
      ActionSample sample = sample_action(dist, action_rng_);
      const double value = model_.value(obs_[e], &cache);
      Transition tr = envs_[e]->step(sample.action);
      ++env_steps_;
      episode_return_[e] += tr.reward;
      const bool ended = tr.done || tr.truncated;
      out.buffer.add(obs_[e], std::move(sample.action), tr.reward, value, sample.log_prob, ended);
      if (ended) {
        out.episodes.push_back({env_steps_, episode_return_[e]});
        episode_return_[e] = 0.0;
        obs_[e] = envs_[e]->reset();
      } else {
        obs_[e] = std::move(tr.observation);
      }
    }
  }
  std::vector<double> bootstrap(static_cast<std::size_t>(config_.n_envs));
  for (int e = 0; e < config_.n_envs; ++e) bootstrap[e] = model_.value(obs_[e], &cache);
  out.buffer.compute_advantages(config_.gamma, config_.gae_lambda, bootstrap);
  return out;
}

UpdateMetrics Trainer::update(RolloutBuffer& buffer, double lr, double momentum) {
  UpdateMetrics m = ppo_update(buffer, model_, policy_opt_, value_opt_, lr, momentum, config_, shuffle_rng_);
  ++updates_;
  return m;
}

double scheduled_momentum(const SchedulePolicy& policy, const MomentumCycle& cycle,
                          std::uint64_t update_index, double base_momentum) {
  if (cycle.enabled && policy.kind != PolicyKind::constant) {
    return momentum_at(policy, cycle, update_index);
  }
  return base_momentum;
}

RunLog train(std::string_view env_id, const SchedulePolicy& policy, const MomentumCycle& cycle,
             const PpoConfig& config, std::uint64_t seed, std::uint64_t total_steps) {
  policy.validate();
  cycle.validate();
  RunLog log;
  log.env_id = std::string(env_id);
  log.seed = seed;
  if (total_steps == 0) return log;

  Trainer trainer(std::string(env_id), config, seed);
  while (trainer.env_steps() < total_steps) {
    const std::uint64_t k = trainer.updates();
    const double lr = lr_at(policy, k);
    const double momentum = scheduled_momentum(policy, cycle, k, config.base_momentum);

    Rollout rollout = trainer.collect_rollout();
    for (const EpisodeEnd& ep : rollout.episodes) {
      RunRow row;
      row.env_step = ep.env_step;
      row.update_index = k;
      row.episode_reward = ep.reward;
      row.lr = lr;
      row.momentum = momentum;
      log.rows.push_back(row);
    }
    const UpdateMetrics m = trainer.update(rollout.buffer, lr, momentum);

    if (log.rows.empty() || log.rows.back().env_step != trainer.env_steps()) {
      RunRow row;
      row.env_step = trainer.env_steps();
      row.update_index = k;
      row.lr = lr;
      row.momentum = momentum;
      log.rows.push_back(row);
    }
    RunRow& last = log.rows.back();
    if (m.diverged) {
      log.diverged = true;
      break;
    }
    last.policy_loss = m.policy_loss;
    last.value_loss = m.value_loss;
    last.entropy = m.entropy;
    last.approx_kl = m.approx_kl;
  }
  return log;
}

}  // namespace cyclr
