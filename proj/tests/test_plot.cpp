#include <fstream>
#include <regex>
#include <stdexcept>

#include "cyclr/harness.hpp"
#include "cyclr/plot.hpp"
#include "doctest.h"
#include "tmpdir.hpp"

using namespace cyclr;

namespace {

std::vector<std::string> path_data(const std::string& svg) {
  std::vector<std::string> out;
  const std::regex re("<path class=\"series\" d=\"([^\"]*)\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it) {
    out.push_back((*it)[1]);
  }
  return out;
}

RunLog reward_log(const std::string& arm, int episodes) {
  RunLog log;
  log.arm = arm;
  for (int i = 0; i < episodes; ++i) {
    RunRow r;
    r.env_step = static_cast<std::uint64_t>(100 * (i + 1));
    r.episode_reward = 10.0 + i;
    r.lr = 1e-3;
    log.rows.push_back(r);
  }
  return log;
}

}  // namespace

TEST_CASE("reward plot is a standalone SVG with one series per log") {
  const std::string svg = render_reward_plot({reward_log("triangular", 50), reward_log("constant", 30)});
  CHECK(svg.starts_with("<?xml"));
  CHECK(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\"") != std::string::npos);
  CHECK(svg.ends_with("</svg>\n"));
  CHECK(path_data(svg).size() == 2);
  CHECK(svg.find(">triangular</text>") != std::string::npos);
  CHECK(svg.find(">constant</text>") != std::string::npos);
}

TEST_CASE("identical logs draw identical polylines") {
  const auto log = reward_log("exp_range", 40);
  const auto paths = path_data(render_reward_plot({log, log}));
  REQUIRE(paths.size() == 2);
  CHECK(paths[0] == paths[1]);
}

TEST_CASE("a log without episodes still gets axes and a legend") {
  RunLog empty;
  empty.arm = "triangular";
  empty.diverged = true;
  const std::string svg = render_reward_plot({empty});
  CHECK(path_data(svg).empty());
  CHECK(svg.find("class=\"legend\"") != std::string::npos);
  CHECK(svg.find("<rect x=") != std::string::npos);
}

TEST_CASE("schedule plot has an lr and a momentum panel") {
  const Arm arm{"exp_range", SchedulePolicy::exp_range(1e-4, 1e-3, 50, 0.99), MomentumCycle{true, 0.8, 1.0}};
  const std::string svg = render_schedule_plot({schedule_log(arm, 1000, 0.9)});
  CHECK(path_data(svg).size() == 2);
  CHECK(svg.find("Learning rate") != std::string::npos);
  CHECK(svg.find("Momentum") != std::string::npos);
}

TEST_CASE("emit_plot reads files and reports malformed input with file and line") {
  TempDir tmp;
  write_file_atomic(tmp.file("a.csv"), runlog_to_csv(reward_log("constant", 5)));
  emit_plot(PlotKind::reward, {tmp.file("a.csv")}, tmp.file("out/a.svg"));
  std::ifstream in(tmp.file("out/a.svg"));
  CHECK(in.good());

  write_file_atomic(tmp.file("bad.csv"), std::string(kRunLogHeader) + "\n1,0,,0.1,0.9,,,,\nnot,a,row\n");
  CHECK_THROWS_WITH_AS(emit_plot(PlotKind::reward, {tmp.file("bad.csv")}, tmp.file("b.svg")),
                       doctest::Contains("bad.csv:3:"), std::runtime_error);
  CHECK_THROWS_AS(emit_plot(PlotKind::reward, {}, tmp.file("c.svg")), std::invalid_argument);

  LrFindResult lf{"cartpole", 1, true, {{0, 1e-5, 2.0}, {1, 1e-3, 1.5}, {2, 1e-1, 40.0}}};
  write_file_atomic(tmp.file("lf.csv"), lrfind_to_csv(lf));
  emit_plot(PlotKind::lrfind, {tmp.file("lf.csv")}, tmp.file("lf.svg"));
  std::ifstream lin(tmp.file("lf.svg"));
  const std::string svg((std::istreambuf_iterator<char>(lin)), {});
  CHECK(path_data(svg).size() == 1);
  CHECK(svg.find("(diverged)") != std::string::npos);
  CHECK_THROWS_AS(parse_plot_kind("histogram"), std::invalid_argument);
}
