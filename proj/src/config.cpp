#include "cyclr/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <stdexcept>

namespace cyclr {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

Arm& arm_named(ExperimentConfig& config, std::string_view name) {
  for (Arm& a : config.arms) {
    if (a.name == name) return a;
  }
  Arm arm;
  arm.name = std::string(name);
  arm.policy.lambda = 0.99;
  config.arms.push_back(arm);
  return config.arms.back();
}

void apply_arm_setting(Arm& arm, std::string_view key, std::string_view value) {
  if (key == "schedule") arm.policy.kind = parse_policy_kind(value);
  else if (key == "eta") arm.policy.eta_fixed = parse_number(value);
  else if (key == "eta_min") arm.policy.eta_min_0 = parse_number(value);
  else if (key == "eta_max") arm.policy.eta_max_0 = parse_number(value);
  else if (key == "stepsize") arm.policy.stepsize = parse_unsigned(value);
  else if (key == "decay") arm.policy.lambda = parse_number(value);
  else if (key == "cycle_momentum") arm.momentum.enabled = parse_bool(value);
  else if (key == "momentum_min") arm.momentum.m_min = parse_number(value);
  else if (key == "momentum_max") arm.momentum.m_max = parse_number(value);
  else throw std::invalid_argument("unknown arm setting '" + std::string(key) + "'");
}

}  // namespace

double parse_number(std::string_view text) {
  text = trim(text);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("invalid number '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("invalid non-negative integer '" + std::string(text) + "'");
  }
  return v;
}

bool parse_bool(std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw std::invalid_argument("invalid boolean '" + std::string(text) + "'");
}

std::vector<Arm> paper_general_arms() {
  const MomentumCycle cycle{true, 0.8, 1.0};
  return {
      Arm{"triangular", SchedulePolicy::triangular(1e-4, 1e-2, 2000), cycle},
      Arm{"exp_range", SchedulePolicy::exp_range(1e-4, 1e-2, 2000, 0.99), cycle},
      Arm{"constant", SchedulePolicy::constant(1e-3), MomentumCycle{}},
  };
}

ExperimentConfig ExperimentConfig::paper_general() {
  ExperimentConfig c;
  c.arms = paper_general_arms();
  c.seeds = {1, 2, 3};
  return c;
}

void ExperimentConfig::validate() const {
  if (!is_known_env(env_id)) throw std::invalid_argument("unknown environment '" + env_id + "'");
  if (arms.empty()) throw std::invalid_argument("experiment needs at least one arm");
  if (seeds.empty()) throw std::invalid_argument("experiment needs at least one seed");
  if (total_steps == 0) throw std::invalid_argument("total_steps must be positive");
  if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
  std::set<std::string> names;
  for (const Arm& arm : arms) {
    if (arm.name.empty() || !names.insert(arm.name).second) {
      throw std::invalid_argument("arm names must be non-empty and unique");
    }
    try {
      arm.policy.validate();
      arm.momentum.validate();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("arm '" + arm.name + "': " + e.what());
    }
  }
  ppo_config().validate();
}

PpoConfig ExperimentConfig::ppo_config() const {
  PpoConfig c = PpoConfig::defaults_for(env_id);
  for (const auto& [key, value] : ppo_overrides) apply_ppo_override(c, key, value);
  return c;
}

void apply_ppo_override(PpoConfig& c, std::string_view key, std::string_view value) {
  auto as_int = [&] { return static_cast<int>(parse_unsigned(value)); };
  if (key == "gamma") c.gamma = parse_number(value);
  else if (key == "gae_lambda") c.gae_lambda = parse_number(value);
  else if (key == "clip_epsilon") c.clip_epsilon = parse_number(value);
  else if (key == "rollout_steps") c.rollout_steps = as_int();
  else if (key == "n_envs") c.n_envs = as_int();
  else if (key == "update_epochs") c.update_epochs = as_int();
  else if (key == "minibatch_size") c.minibatch_size = as_int();
  else if (key == "value_coef") c.value_coef = parse_number(value);
  else if (key == "entropy_coef") c.entropy_coef = parse_number(value);
  else if (key == "max_grad_norm") c.max_grad_norm = parse_number(value);
  else if (key == "base_momentum") c.base_momentum = parse_number(value);
  else if (key == "adam_beta2") c.adam_beta2 = parse_number(value);
  else if (key == "adam_epsilon") c.adam_epsilon = parse_number(value);
  else if (key == "hidden") {
    c.hidden.clear();
    for (auto part : split_list(value)) c.hidden.push_back(parse_unsigned(part));
  } else if (key == "optimizer") {
    const auto v = trim(value);
    if (v == "adam") c.optimizer = OptimizerKind::adam;
    else if (v == "sgd") c.optimizer = OptimizerKind::sgd;
    else throw std::invalid_argument("optimizer must be adam or sgd");
  } else {
    throw std::invalid_argument("unknown ppo setting '" + std::string(key) + "'");
  }
}

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "preset") {
    if (value != "paper-general") throw std::invalid_argument("unknown preset '" + std::string(value) + "'");
    config.arms = paper_general_arms();
  } else if (key == "env") {
    config.env_id = std::string(value);
  } else if (key == "seeds") {
    config.seeds.clear();
    for (auto part : split_list(value)) {
      if (!part.empty()) config.seeds.push_back(parse_unsigned(part));
    }
  } else if (key == "total_steps") {
    config.total_steps = parse_unsigned(value);
  } else if (key == "out") {
    config.out_dir = std::string(value);
  } else if (key == "jobs") {
    config.jobs = static_cast<int>(parse_unsigned(value));
  } else if (key.starts_with("ppo.")) {
    PpoConfig probe;
    apply_ppo_override(probe, key.substr(4), value);  // reject bad keys early
    config.ppo_overrides.emplace_back(std::string(key.substr(4)), std::string(value));
  } else if (key.starts_with("arm.")) {
    const std::string_view rest = key.substr(4);
    const auto dot = rest.rfind('.');
    if (dot == std::string_view::npos || dot == 0) {
      throw std::invalid_argument("arm settings look like arm.<name>.<field>");
    }
    apply_arm_setting(arm_named(config, rest.substr(0, dot)), rest.substr(dot + 1), value);
  } else {
    throw std::invalid_argument("unknown setting '" + std::string(key) + "'");
  }
}

ExperimentConfig parse_experiment_config(std::istream& in, std::string_view source) {
  ExperimentConfig config;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument(std::string(source) + ":" + std::to_string(line_no) +
                                  ": expected key = value");
    }
    try {
      apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  return parse_experiment_config(in, path);
}

}  // namespace cyclr
