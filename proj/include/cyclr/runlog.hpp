#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cyclr {

/// One row of a training log. Episode rows carry episode_reward; the row that
/// closes an update's rollout carries the update's loss metrics. A row can be
/// both when an episode ends on the last rollout step.
struct RunRow {
  std::uint64_t env_step = 0;
  std::uint64_t update_index = 0;
  std::optional<double> episode_reward;
  double lr = 0.0;
  double momentum = 0.0;
  std::optional<double> policy_loss;
  std::optional<double> value_loss;
  std::optional<double> entropy;
  std::optional<double> approx_kl;

  bool operator==(const RunRow&) const = default;
};

struct RunLog {
  std::string run_id;
  std::string arm;
  std::string env_id;
  std::uint64_t seed = 0;
  bool diverged = false;
  std::vector<RunRow> rows;

  std::vector<double> episode_rewards() const;
  /// env_step of each episode, aligned with episode_rewards().
  std::vector<std::uint64_t> episode_steps() const;

  bool operator==(const RunLog&) const = default;
};

inline constexpr std::string_view kRunLogHeader =
    "env_step,update_index,episode_reward,lr,momentum,policy_loss,value_loss,entropy,approx_kl";

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

/// CSV: "# key=value" metadata lines (run_id, arm, env, seed, diverged), the
/// header line, then one line per row. Missing optionals are empty fields.
void write_runlog(std::ostream& out, const RunLog& log);
std::string runlog_to_csv(const RunLog& log);
/// Only the data rows, without metadata or header.
std::string runlog_rows_csv(const RunLog& log);

/// Throws std::runtime_error naming `source` and the line number on malformed input.
RunLog parse_runlog(std::istream& in, std::string_view source = "<stream>");
RunLog read_runlog_file(const std::string& path);

/// Writes to a temporary sibling then renames over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);

/// Trailing mean over the last `window` entries (fewer at the start).
std::vector<double> trailing_mean(const std::vector<double>& values, std::size_t window);

}  // namespace cyclr
