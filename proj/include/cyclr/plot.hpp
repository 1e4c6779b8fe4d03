#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cyclr/harness.hpp"
#include "cyclr/runlog.hpp"

namespace cyclr {

enum class PlotKind { reward, schedule, lrfind };

PlotKind parse_plot_kind(std::string_view text);

/// Episode reward (20-episode trailing mean) against environment steps, one
/// polyline per log, labelled by arm.
std::string render_reward_plot(const std::vector<RunLog>& logs);
/// Learning rate (top panel) and momentum (bottom panel) against update index.
std::string render_schedule_plot(const std::vector<RunLog>& logs);
/// Mean update loss against learning rate on a log10 axis.
std::string render_lrfind_plot(const std::vector<LrFindResult>& results);

/// Reads every input (RunLog CSVs, or lr-find CSVs for PlotKind::lrfind),
/// renders and writes the SVG atomically. Parse errors carry file and line.
void emit_plot(PlotKind kind, const std::vector<std::string>& inputs, const std::string& out_path);

inline constexpr std::size_t kRewardSmoothingWindow = 20;

}  // namespace cyclr
