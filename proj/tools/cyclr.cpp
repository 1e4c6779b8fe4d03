// Command-line front end: train, experiment, lr-find, plot, schedule.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cyclr/config.hpp"
#include "cyclr/harness.hpp"
#include "cyclr/plot.hpp"
#include "cyclr/ppo.hpp"
#include "cyclr/runlog.hpp"
#include "cyclr/schedule.hpp"

namespace {

struct ScheduleFlags {
  std::string schedule = "constant";
  double lr = 1e-3;
  double lr_min = 1e-4;
  double lr_max = 1e-2;
  std::uint64_t stepsize = 2000;
  double decay = 0.99;
  bool cycle_momentum = false;
  double momentum_min = 0.8;
  double momentum_max = 1.0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--schedule", schedule, "constant | triangular | exp_range")->capture_default_str();
    cmd->add_option("--lr", lr, "learning rate of the constant schedule")->capture_default_str();
    cmd->add_option("--lr-min", lr_min, "lower cycle bound")->capture_default_str();
    cmd->add_option("--lr-max", lr_max, "upper cycle bound")->capture_default_str();
    cmd->add_option("--stepsize", stepsize, "updates per half cycle")->capture_default_str();
    cmd->add_option("--decay", decay, "exp_range per-cycle decay factor")->capture_default_str();
    cmd->add_flag("--cycle-momentum", cycle_momentum, "counter-cycle the optimizer momentum");
    cmd->add_option("--momentum-min", momentum_min)->capture_default_str();
    cmd->add_option("--momentum-max", momentum_max)->capture_default_str();
  }

  cyclr::Arm arm() const {
    cyclr::Arm a;
    a.name = schedule;
    switch (cyclr::parse_policy_kind(schedule)) {
      case cyclr::PolicyKind::constant:
        a.policy = cyclr::SchedulePolicy::constant(lr);
        break;
      case cyclr::PolicyKind::triangular:
        a.policy = cyclr::SchedulePolicy::triangular(lr_min, lr_max, stepsize);
        break;
      case cyclr::PolicyKind::exp_range:
        a.policy = cyclr::SchedulePolicy::exp_range(lr_min, lr_max, stepsize, decay);
        break;
    }
    a.momentum = cyclr::MomentumCycle{cycle_momentum, momentum_min, momentum_max};
    a.momentum.validate();
    return a;
  }
};

void apply_overrides(cyclr::PpoConfig& config, const std::vector<std::string>& overrides) {
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--ppo expects key=value, got '" + kv + "'");
    cyclr::apply_ppo_override(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cyclical learning-rate schedules for PPO"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "train one seeded PPO run and write its RunLog CSV");
  std::string env = "cartpole";
  std::uint64_t seed = 1;
  std::uint64_t total_steps = 200000;
  std::string out;
  std::vector<std::string> ppo_overrides;
  ScheduleFlags sched;
  train_cmd->add_option("--env", env, "cartpole | pendulum | chain")->capture_default_str();
  sched.add_to(train_cmd);
  train_cmd->add_option("--seed", seed)->capture_default_str();
  train_cmd->add_option("--total-steps", total_steps)->capture_default_str();
  train_cmd->add_option("--out", out, "output CSV path")->required();
  train_cmd->add_option("--ppo", ppo_overrides, "PPO override key=value (repeatable)");

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "run every (arm, seed) pair of a config file");
  std::string config_path;
  std::vector<std::string> settings;
  exp_cmd->add_option("--config", config_path, "key=value config file");
  exp_cmd->add_option("--set", settings, "extra key=value setting applied after the file (repeatable)");

  // lr-find
  auto* find_cmd = app.add_subcommand("lr-find", "learning-rate range test");
  double lr_start = 1e-5;
  double lr_end = 1e-1;
  std::uint64_t updates = 200;
  find_cmd->add_option("--env", env)->capture_default_str();
  find_cmd->add_option("--lr-start", lr_start)->capture_default_str();
  find_cmd->add_option("--lr-end", lr_end)->capture_default_str();
  find_cmd->add_option("--updates", updates)->capture_default_str();
  find_cmd->add_option("--seed", seed)->capture_default_str();
  find_cmd->add_option("--out", out, "output CSV path")->required();
  find_cmd->add_option("--ppo", ppo_overrides, "PPO override key=value (repeatable)");

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "render RunLog or lr-find CSVs as SVG");
  std::string kind = "reward";
  std::vector<std::string> inputs;
  plot_cmd->add_option("--kind", kind, "reward | schedule | lrfind")->capture_default_str();
  plot_cmd->add_option("--in", inputs, "input CSV files")->required();
  plot_cmd->add_option("--out", out, "output SVG path")->required();

  // schedule
  auto* sched_cmd = app.add_subcommand("schedule", "write the lr/momentum schedule as a RunLog CSV");
  ScheduleFlags sched_only;
  std::uint64_t n_updates = 20000;
  double base_momentum = 0.9;
  sched_only.add_to(sched_cmd);
  sched_cmd->add_option("--updates", n_updates)->capture_default_str();
  sched_cmd->add_option("--base-momentum", base_momentum)->capture_default_str();
  sched_cmd->add_option("--out", out, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      const cyclr::Arm arm = sched.arm();
      cyclr::PpoConfig config = cyclr::PpoConfig::defaults_for(env);
      apply_overrides(config, ppo_overrides);
      if (!cyclr::is_known_env(env)) throw std::invalid_argument("unknown environment '" + env + "'");
      cyclr::RunLog log = cyclr::train(env, arm.policy, arm.momentum, config, seed, total_steps);
      log.arm = arm.name;
      log.run_id = env + "-" + arm.name + "-seed" + std::to_string(seed);
      cyclr::write_file_atomic(out, cyclr::runlog_to_csv(log));
      const auto rewards = log.episode_rewards();
      const auto smooth = cyclr::trailing_mean(rewards, 100);
      std::cout << "episodes: " << rewards.size()
                << (smooth.empty() ? std::string() : ", final 100-episode mean: " + std::to_string(smooth.back()))
                << (log.diverged ? ", diverged" : "") << "\nwrote " << out << "\n";
    } else if (*exp_cmd) {
      cyclr::ExperimentConfig config;
      if (!config_path.empty()) config = cyclr::load_experiment_config(config_path);
      for (const auto& kv : settings) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        cyclr::apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
      }
      const auto results = cyclr::run_experiment(config, &std::cout);
      for (const auto& r : results) {
        if (r.error) return 1;
      }
    } else if (*find_cmd) {
      cyclr::PpoConfig config = cyclr::PpoConfig::defaults_for(env);
      apply_overrides(config, ppo_overrides);
      if (!cyclr::is_known_env(env)) throw std::invalid_argument("unknown environment '" + env + "'");
      const auto result = cyclr::lr_find(env, lr_start, lr_end, updates, seed, config);
      cyclr::write_file_atomic(out, cyclr::lrfind_to_csv(result));
      std::cout << result.points.size() << " updates" << (result.diverged ? ", diverged at lr " : ", last lr ")
                << (result.points.empty() ? 0.0 : result.points.back().lr) << "\nwrote " << out << "\n";
    } else if (*plot_cmd) {
      cyclr::emit_plot(cyclr::parse_plot_kind(kind), inputs, out);
      std::cout << "wrote " << out << "\n";
    } else if (*sched_cmd) {
      const cyclr::RunLog log = cyclr::schedule_log(sched_only.arm(), n_updates, base_momentum);
      cyclr::write_file_atomic(out, cyclr::runlog_to_csv(log));
      std::cout << "wrote " << out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
