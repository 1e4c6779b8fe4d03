#include "cyclr/harness.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <istream>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace cyclr {

std::string run_file_name(std::string_view arm, std::uint64_t seed) {
  return std::string(arm) + "_seed" + std::to_string(seed) + ".csv";
}

RunLog run_arm(const ExperimentConfig& config, const Arm& arm, std::uint64_t seed) {
  RunLog log = train(config.env_id, arm.policy, arm.momentum, config.ppo_config(), seed,
                     config.total_steps);
  log.arm = arm.name;
  log.run_id = config.env_id + "-" + arm.name + "-seed" + std::to_string(seed);
  return log;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& config, std::ostream* progress) {
  config.validate();
  namespace fs = std::filesystem;

  std::vector<RunResult> results;
  std::vector<const Arm*> run_arms;
  for (const Arm& arm : config.arms) {
    for (std::uint64_t seed : config.seeds) {
      results.push_back({arm.name, seed, (fs::path(config.out_dir) / run_file_name(arm.name, seed)).string(),
                         false, std::nullopt});
      run_arms.push_back(&arm);
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < results.size(); i = next++) {
      RunResult& r = results[i];
      try {
        const RunLog log = run_arm(config, *run_arms[i], r.seed);
        r.diverged = log.diverged;
        write_file_atomic(r.path, runlog_to_csv(log));
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      if (progress != nullptr) {
        std::lock_guard lock(progress_mutex);
        *progress << r.arm << " seed " << r.seed << ": "
                  << (r.error ? "error: " + *r.error : (r.diverged ? "diverged" : "ok")) << " -> "
                  << r.path << "\n";
      }
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), results.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }

  std::string summary = "arm,seed,file,status,error\n";
  for (const RunResult& r : results) {
    summary += r.arm + "," + std::to_string(r.seed) + "," + fs::path(r.path).filename().string() + "," +
               (r.error ? "error" : (r.diverged ? "diverged" : "ok")) + ",";
    if (r.error) {
      std::string msg = *r.error;
      for (char& c : msg) {
        if (c == ',' || c == '\n') c = ' ';
      }
      summary += msg;
    }
    summary += "\n";
  }
  try {
    write_file_atomic((fs::path(config.out_dir) / "summary.csv").string(), summary);
  } catch (const std::exception& e) {
    if (progress != nullptr) *progress << "summary not written: " << e.what() << "\n";
  }
  return results;
}

RunLog schedule_log(const Arm& arm, std::uint64_t n_updates, double base_momentum) {
  arm.policy.validate();
  arm.momentum.validate();
  RunLog log;
  log.arm = arm.name;
  log.run_id = "schedule-" + arm.name;
  for (std::uint64_t k = 0; k < n_updates; ++k) {
    RunRow row;
    row.env_step = k;
    row.update_index = k;
    row.lr = lr_at(arm.policy, k);
    row.momentum = scheduled_momentum(arm.policy, arm.momentum, k, base_momentum);
    log.rows.push_back(row);
  }
  return log;
}

LrFindResult lr_find(std::string_view env_id, double eta_start, double eta_end,
                     std::uint64_t n_updates, std::uint64_t seed, const PpoConfig& config) {
  if (!(eta_start > 0.0 && eta_start < eta_end)) {
    throw std::invalid_argument("lr_find needs 0 < eta_start < eta_end");
  }
  if (n_updates < 2) throw std::invalid_argument("lr_find needs at least two updates");

  LrFindResult result;
  result.env_id = std::string(env_id);
  result.seed = seed;
  Trainer trainer(std::string(env_id), config, seed);
  const double last = static_cast<double>(n_updates - 1);
  std::optional<double> initial;
  for (std::uint64_t k = 0; k < n_updates; ++k) {
    const double w = static_cast<double>(k) / last;
    const double lr = eta_start * (1.0 - w) + eta_end * w;
    Rollout rollout = trainer.collect_rollout();
    const UpdateMetrics m = trainer.update(rollout.buffer, lr, config.base_momentum);
    result.points.push_back({k, lr, m.total_loss});
    if (m.diverged || !std::isfinite(m.total_loss)) {
      result.diverged = true;
      break;
    }
    if (!initial) initial = m.total_loss;
    if (std::abs(m.total_loss) > kLrFindDivergenceFactor * std::abs(*initial)) {
      result.diverged = true;
      break;
    }
  }
  return result;
}

std::string lrfind_to_csv(const LrFindResult& result) {
  std::string out = "# env=" + result.env_id + "\n# seed=" + std::to_string(result.seed) +
                    "\n# diverged=" + (result.diverged ? "1" : "0") + "\nupdate,lr,total_loss\n";
  for (const auto& p : result.points) {
    out += std::to_string(p.update) + "," + format_double(p.lr) + "," + format_double(p.loss) + "\n";
  }
  return out;
}

LrFindResult parse_lrfind(std::istream& in, std::string_view source) {
  LrFindResult result;
  std::string raw;
  std::size_t line_no = 0;
  bool header = false;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error(std::string(source) + ":" + std::to_string(line_no) + ": " + what);
  };
  auto number = [&](std::string_view f) {
    double v = 0.0;
    auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size()) fail("invalid number '" + std::string(f) + "'");
    return v;
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.starts_with("# ")) {
      line.remove_prefix(2);
      if (line.starts_with("env=")) result.env_id = line.substr(4);
      else if (line.starts_with("seed=")) result.seed = static_cast<std::uint64_t>(number(line.substr(5)));
      else if (line.starts_with("diverged=")) result.diverged = line.substr(9) == "1";
      continue;
    }
    if (!header) {
      if (line != "update,lr,total_loss") fail("unexpected header '" + std::string(line) + "'");
      header = true;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos) fail("expected 3 fields");
    LrFindPoint p;
    p.update = static_cast<std::uint64_t>(number(line.substr(0, c1)));
    p.lr = number(line.substr(c1 + 1, c2 - c1 - 1));
    p.loss = number(line.substr(c2 + 1));
    result.points.push_back(p);
  }
  if (!header) fail("missing header line");
  return result;
}

}  // namespace cyclr
