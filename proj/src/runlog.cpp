#include "cyclr/runlog.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace cyclr {

std::vector<double> RunLog::episode_rewards() const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.episode_reward) out.push_back(*r.episode_reward);
  }
  return out;
}

std::vector<std::uint64_t> RunLog::episode_steps() const {
  std::vector<std::uint64_t> out;
  for (const auto& r : rows) {
    if (r.episode_reward) out.push_back(r.env_step);
  }
  return out;
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

void put_optional(std::string& line, const std::optional<double>& v) {
  line += ',';
  if (v) line += format_double(*v);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string& what) {
  throw std::runtime_error(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view field, std::string_view source, std::size_t line) {
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    // from_chars rejects "inf"/"nan" spellings produced by some writers.
    if (field == "inf") return std::numeric_limits<double>::infinity();
    if (field == "-inf") return -std::numeric_limits<double>::infinity();
    if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
    fail(source, line, "invalid number '" + std::string(field) + "'");
  }
  return v;
}

std::uint64_t parse_u64(std::string_view field, std::string_view source, std::size_t line) {
  std::uint64_t v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    fail(source, line, "invalid integer '" + std::string(field) + "'");
  }
  return v;
}

std::optional<double> parse_optional(std::string_view field, std::string_view source,
                                     std::size_t line) {
  if (field.empty()) return std::nullopt;
  return parse_double(field, source, line);
}

}  // namespace

std::string runlog_rows_csv(const RunLog& log) {
  std::string out;
  for (const auto& r : log.rows) {
    std::string line = std::to_string(r.env_step) + ',' + std::to_string(r.update_index);
    put_optional(line, r.episode_reward);
    line += ',' + format_double(r.lr) + ',' + format_double(r.momentum);
    put_optional(line, r.policy_loss);
    put_optional(line, r.value_loss);
    put_optional(line, r.entropy);
    put_optional(line, r.approx_kl);
    out += line;
    out += '\n';
  }
  return out;
}

std::string runlog_to_csv(const RunLog& log) {
  std::string out;
  out += "# run_id=" + log.run_id + "\n";
  out += "# arm=" + log.arm + "\n";
  out += "# env=" + log.env_id + "\n";
  out += "# seed=" + std::to_string(log.seed) + "\n";
  out += std::string("# diverged=") + (log.diverged ? "1" : "0") + "\n";
  out += kRunLogHeader;
  out += '\n';
  out += runlog_rows_csv(log);
  return out;
}

void write_runlog(std::ostream& out, const RunLog& log) { out << runlog_to_csv(log); }

RunLog parse_runlog(std::istream& in, std::string_view source) {
  RunLog log;
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.starts_with('#')) {
      line.remove_prefix(1);
      while (line.starts_with(' ')) line.remove_prefix(1);
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string_view key = line.substr(0, eq);
      const std::string_view value = line.substr(eq + 1);
      if (key == "run_id") log.run_id = value;
      else if (key == "arm") log.arm = value;
      else if (key == "env") log.env_id = value;
      else if (key == "seed") log.seed = parse_u64(value, source, line_no);
      else if (key == "diverged") log.diverged = value == "1" || value == "true";
      continue;
    }
    if (!header_seen) {
      if (line != kRunLogHeader) fail(source, line_no, "unexpected header '" + std::string(line) + "'");
      header_seen = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 9) {
      fail(source, line_no, "expected 9 fields, found " + std::to_string(f.size()));
    }
    RunRow r;
    r.env_step = parse_u64(f[0], source, line_no);
    r.update_index = parse_u64(f[1], source, line_no);
    r.episode_reward = parse_optional(f[2], source, line_no);
    r.lr = parse_double(f[3], source, line_no);
    r.momentum = parse_double(f[4], source, line_no);
    r.policy_loss = parse_optional(f[5], source, line_no);
    r.value_loss = parse_optional(f[6], source, line_no);
    r.entropy = parse_optional(f[7], source, line_no);
    r.approx_kl = parse_optional(f[8], source, line_no);
    if (!log.rows.empty() && r.env_step <= log.rows.back().env_step) {
      fail(source, line_no, "env_step must increase from row to row");
    }
    log.rows.push_back(r);
  }
  if (!header_seen) fail(source, line_no, "missing header line");
  return log;
}

RunLog read_runlog_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return parse_runlog(in, path);
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename onto '" + path + "': " + ec.message());
  }
}

std::vector<double> trailing_mean(const std::vector<double>& values, std::size_t window) {
  std::vector<double> out(values.size());
  window = std::max<std::size_t>(window, 1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t first = i + 1 > window ? i + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t j = first; j <= i; ++j) sum += values[j];
    out[i] = sum / static_cast<double>(i + 1 - first);
  }
  return out;
}

}  // namespace cyclr
