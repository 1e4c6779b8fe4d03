#include "cyclr/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

namespace cyclr {

namespace {

struct Series {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;
};

struct Panel {
  double left, top, width, height;
  std::string title;
  std::string x_label;
  std::string y_label;
};

std::string num(double v, const char* fmt = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string color_for(std::string_view label, std::size_t index) {
  // Same hues for the three standard arms wherever they appear.
  if (label == "triangular") return "#27ae60";
  if (label == "exp_range") return "#00bfff";
  if (label == "constant") return "#8e44ad";
  static const char* palette[] = {"#e67e22", "#c0392b", "#2c3e50", "#16a085", "#d35400", "#7f8c8d"};
  return palette[index % std::size(palette)];
}

std::pair<double, double> padded_range(double lo, double hi) {
  if (!(lo <= hi)) return {0.0, 1.0};
  if (lo == hi) {
    const double pad = lo == 0.0 ? 0.5 : std::abs(lo) * 0.05;
    return {lo - pad, hi + pad};
  }
  const double pad = (hi - lo) * 0.05;
  return {lo - pad, hi + pad};
}

std::string draw_panel(const Panel& p, const std::vector<Series>& series) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0.0;
    xmax = 1.0;
    ymin = 0.0;
    ymax = 1.0;
  }
  if (xmin == xmax) xmax = xmin + 1.0;
  std::tie(ymin, ymax) = padded_range(ymin, ymax);

  auto sx = [&](double x) { return p.left + (x - xmin) / (xmax - xmin) * p.width; };
  auto sy = [&](double y) { return p.top + p.height - (y - ymin) / (ymax - ymin) * p.height; };

  std::string out;
  out += "<g class=\"panel\">\n";
  out += "<text x=\"" + num(p.left + p.width / 2) + "\" y=\"" + num(p.top - 12) +
         "\" text-anchor=\"middle\" font-size=\"15\">" + escape(p.title) + "</text>\n";
  out += "<rect x=\"" + num(p.left) + "\" y=\"" + num(p.top) + "\" width=\"" + num(p.width) +
         "\" height=\"" + num(p.height) + "\" fill=\"none\" stroke=\"#333\"/>\n";
  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double fx = xmin + (xmax - xmin) * i / kTicks;
    const double fy = ymin + (ymax - ymin) * i / kTicks;
    const double px = sx(fx);
    const double py = sy(fy);
    out += "<line x1=\"" + num(px) + "\" y1=\"" + num(p.top + p.height) + "\" x2=\"" + num(px) +
           "\" y2=\"" + num(p.top + p.height + 5) + "\" stroke=\"#333\"/>\n";
    out += "<text x=\"" + num(px) + "\" y=\"" + num(p.top + p.height + 18) +
           "\" text-anchor=\"middle\" font-size=\"11\">" + num(fx, "%.3g") + "</text>\n";
    out += "<line x1=\"" + num(p.left - 5) + "\" y1=\"" + num(py) + "\" x2=\"" + num(p.left) +
           "\" y2=\"" + num(py) + "\" stroke=\"#333\"/>\n";
    out += "<text x=\"" + num(p.left - 8) + "\" y=\"" + num(py + 4) +
           "\" text-anchor=\"end\" font-size=\"11\">" + num(fy, "%.3g") + "</text>\n";
  }
  out += "<text x=\"" + num(p.left + p.width / 2) + "\" y=\"" + num(p.top + p.height + 38) +
         "\" text-anchor=\"middle\" font-size=\"13\">" + escape(p.x_label) + "</text>\n";
  out += "<text transform=\"translate(" + num(p.left - 62) + "," + num(p.top + p.height / 2) +
         ") rotate(-90)\" text-anchor=\"middle\" font-size=\"13\">" + escape(p.y_label) + "</text>\n";

  for (const auto& s : series) {
    if (s.points.empty()) continue;
    std::string d;
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      const auto [x, y] = s.points[i];
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      d += (d.empty() ? "M" : " L") + num(sx(x)) + " " + num(sy(y));
    }
    if (d.empty()) continue;
    out += "<path class=\"series\" d=\"" + d + "\" fill=\"none\" stroke=\"" + s.color +
           "\" stroke-width=\"1.5\"/>\n";
  }

  double ly = p.top + 16;
  for (const auto& s : series) {
    const double lx = p.left + p.width - 150;
    out += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(lx + 24) +
           "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + s.color + "\" stroke-width=\"2\"/>\n";
    out += "<text class=\"legend\" x=\"" + num(lx + 30) + "\" y=\"" + num(ly) + "\" font-size=\"12\">" +
           escape(s.label) + "</text>\n";
    ly += 16;
  }
  out += "</g>\n";
  return out;
}

std::string svg_document(double width, double height, const std::string& body) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width, "%.0f") + "\" height=\"" +
         num(height, "%.0f") + "\" viewBox=\"0 0 " + num(width, "%.0f") + " " + num(height, "%.0f") +
         "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body +
         "</svg>\n";
}

std::string label_for(const RunLog& log) {
  if (!log.arm.empty()) return log.arm;
  if (!log.run_id.empty()) return log.run_id;
  return "run";
}

}  // namespace

PlotKind parse_plot_kind(std::string_view text) {
  if (text == "reward") return PlotKind::reward;
  if (text == "schedule") return PlotKind::schedule;
  if (text == "lrfind") return PlotKind::lrfind;
  throw std::invalid_argument("unknown plot kind '" + std::string(text) + "'");
}

std::string render_reward_plot(const std::vector<RunLog>& logs) {
  std::vector<Series> series;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const auto& log = logs[i];
    Series s{label_for(log), color_for(label_for(log), i), {}};
    const auto rewards = log.episode_rewards();
    const auto steps = log.episode_steps();
    const auto smooth = trailing_mean(rewards, kRewardSmoothingWindow);
    for (std::size_t k = 0; k < smooth.size(); ++k) {
      s.points.emplace_back(static_cast<double>(steps[k]), smooth[k]);
    }
    series.push_back(std::move(s));
  }
  const Panel panel{90, 50, 760, 400, "Episode reward", "environment steps",
                    "episode reward (20-episode mean)"};
  return svg_document(900, 520, draw_panel(panel, series));
}

std::string render_schedule_plot(const std::vector<RunLog>& logs) {
  std::vector<Series> lr_series, momentum_series;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const auto& log = logs[i];
    const std::string label = label_for(log);
    Series lr{label, color_for(label, i), {}};
    Series mom{label, color_for(label, i), {}};
    std::map<std::uint64_t, std::pair<double, double>> by_update;
    for (const auto& r : log.rows) by_update.try_emplace(r.update_index, r.lr, r.momentum);
    for (const auto& [k, v] : by_update) {
      lr.points.emplace_back(static_cast<double>(k), v.first);
      mom.points.emplace_back(static_cast<double>(k), v.second);
    }
    lr_series.push_back(std::move(lr));
    momentum_series.push_back(std::move(mom));
  }
  const Panel top{90, 50, 760, 260, "Learning rate", "update index", "learning rate"};
  const Panel bottom{90, 400, 760, 260, "Momentum", "update index", "momentum"};
  return svg_document(900, 720, draw_panel(top, lr_series) + draw_panel(bottom, momentum_series));
}

std::string render_lrfind_plot(const std::vector<LrFindResult>& results) {
  std::vector<Series> series;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    std::string label = r.env_id + " seed " + std::to_string(r.seed);
    if (r.diverged) label += " (diverged)";
    Series s{label, color_for(label, i), {}};
    for (const auto& p : r.points) {
      if (p.lr > 0.0) s.points.emplace_back(std::log10(p.lr), p.loss);
    }
    series.push_back(std::move(s));
  }
  const Panel panel{90, 50, 760, 400, "Learning-rate range test", "log10(learning rate)",
                    "mean update loss"};
  return svg_document(900, 520, draw_panel(panel, series));
}

void emit_plot(PlotKind kind, const std::vector<std::string>& inputs, const std::string& out_path) {
  if (inputs.empty()) throw std::invalid_argument("plot needs at least one input file");
  std::string svg;
  if (kind == PlotKind::lrfind) {
    std::vector<LrFindResult> results;
    for (const auto& path : inputs) {
      std::ifstream in(path);
      if (!in) throw std::runtime_error("cannot open '" + path + "'");
      results.push_back(parse_lrfind(in, path));
    }
    svg = render_lrfind_plot(results);
  } else {
    std::vector<RunLog> logs;
    for (const auto& path : inputs) logs.push_back(read_runlog_file(path));
    svg = kind == PlotKind::reward ? render_reward_plot(logs) : render_schedule_plot(logs);
  }
  write_file_atomic(out_path, svg);
}

}  // namespace cyclr
