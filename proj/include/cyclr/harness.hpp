#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cyclr/config.hpp"
#include "cyclr/ppo.hpp"
#include "cyclr/runlog.hpp"

namespace cyclr {

struct RunResult {
  std::string arm;
  std::uint64_t seed = 0;
  std::string path;
  bool diverged = false;
  std::optional<std::string> error;  // set when the run or its file write failed
};

/// "<arm>_seed<seed>.csv"
std::string run_file_name(std::string_view arm, std::uint64_t seed);

/// Trains every (arm, seed) pair, `config.jobs` at a time, and writes one
/// RunLog CSV per pair into config.out_dir plus a summary.csv. A failing
/// run is reported in its RunResult and does not stop the others. Results
/// are ordered arm-major, then by seed. Throws std::invalid_argument when the
/// config is invalid, before anything runs.
std::vector<RunResult> run_experiment(const ExperimentConfig& config, std::ostream* progress = nullptr);

/// Trains one arm and returns its log with run_id and arm filled in.
RunLog run_arm(const ExperimentConfig& config, const Arm& arm, std::uint64_t seed);

/// Schedule-only log: one row per update index in [0, n_updates) with the
/// learning rate and momentum the trainer would use. env_step mirrors the
/// update index.
RunLog schedule_log(const Arm& arm, std::uint64_t n_updates, double base_momentum);

struct LrFindPoint {
  std::uint64_t update = 0;
  double lr = 0.0;
  double loss = 0.0;

  bool operator==(const LrFindPoint&) const = default;
};

struct LrFindResult {
  std::string env_id;
  std::uint64_t seed = 0;
  bool diverged = false;
  std::vector<LrFindPoint> points;

  bool operator==(const LrFindResult&) const = default;
};

/// Loss ratio over the first update's loss beyond which lr_find stops.
inline constexpr double kLrFindDivergenceFactor = 4.0;

/// Trains with the learning rate rising linearly from eta_start (first
/// update) to eta_end (last update), recording the mean total loss of each
/// update. Stops and flags divergence on a non-finite loss or when
/// |loss| > 4 * |first loss|. Throws std::invalid_argument unless
/// 0 < eta_start < eta_end and n_updates >= 2.
LrFindResult lr_find(std::string_view env_id, double eta_start, double eta_end,
                     std::uint64_t n_updates, std::uint64_t seed, const PpoConfig& config);

/// CSV with "# env=", "# seed=", "# diverged=" metadata and columns update,lr,total_loss.
std::string lrfind_to_csv(const LrFindResult& result);
LrFindResult parse_lrfind(std::istream& in, std::string_view source = "<stream>");

}  // namespace cyclr
