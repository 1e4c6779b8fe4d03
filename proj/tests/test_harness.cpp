#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cyclr/harness.hpp"
#include "doctest.h"
#include "tmpdir.hpp"

using namespace cyclr;

namespace {

ExperimentConfig small_experiment(const std::string& out) {
  ExperimentConfig c;
  c.env_id = "cartpole";
  c.arms = paper_general_arms();
  c.seeds = {1, 2};
  c.total_steps = 2048;
  c.out_dir = out;
  c.jobs = 3;
  return c;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("run_experiment writes one log per arm and seed") {
  TempDir tmp;
  const auto config = small_experiment(tmp.path.string());
  const auto results = run_experiment(config);
  REQUIRE(results.size() == 6);
  for (const auto& r : results) {
    CHECK(!r.error);
    const RunLog log = read_runlog_file(r.path);
    CHECK(log.arm == r.arm);
    CHECK(log.seed == r.seed);
    const Arm* arm = nullptr;
    for (const auto& a : config.arms) {
      if (a.name == r.arm) arm = &a;
    }
    REQUIRE(arm != nullptr);
    for (const auto& row : log.rows) {
      CHECK(row.lr == lr_at(arm->policy, row.update_index));
    }
  }
  CHECK(results[0].arm == "triangular");
  CHECK(results[1].seed == 2);
  const std::string summary = slurp(tmp.file("summary.csv"));
  CHECK(summary.starts_with("arm,seed,file,status,error\n"));
  CHECK(summary.find("constant,2,constant_seed2.csv,ok,") != std::string::npos);
}

TEST_CASE("parallel and serial runs write identical files") {
  TempDir a, b;
  auto ca = small_experiment(a.path.string());
  auto cb = small_experiment(b.path.string());
  ca.jobs = 1;
  cb.jobs = 4;
  run_experiment(ca);
  run_experiment(cb);
  for (const auto& arm : ca.arms) {
    for (auto seed : ca.seeds) {
      const auto name = run_file_name(arm.name, seed);
      CHECK(slurp(a.file(name)) == slurp(b.file(name)));
    }
  }
}

TEST_CASE("an invalid experiment fails before running anything") {
  TempDir tmp;
  auto c = small_experiment(tmp.file("out"));
  c.seeds.clear();
  CHECK_THROWS_AS(run_experiment(c), std::invalid_argument);
  CHECK(!std::filesystem::exists(tmp.file("out")));
}

TEST_CASE("a failing run is recorded and the others still complete") {
  TempDir tmp;
  auto c = small_experiment(tmp.path.string());
  c.seeds = {1};
  // A directory squatting on one output path makes that write fail.
  std::filesystem::create_directories(tmp.path / run_file_name("exp_range", 1));
  const auto results = run_experiment(c);
  REQUIRE(results.size() == 3);
  CHECK(!results[0].error);
  CHECK(results[1].error);
  CHECK(!results[2].error);
  CHECK(slurp(tmp.file("summary.csv")).find("exp_range,1,exp_range_seed1.csv,error,") != std::string::npos);
}

TEST_CASE("schedule log reproduces the schedule") {
  const Arm arm{"exp_range", SchedulePolicy::exp_range(1e-4, 1e-3, 5, 0.9), MomentumCycle{true, 0.8, 1.0}};
  const RunLog log = schedule_log(arm, 100, 0.9);
  REQUIRE(log.rows.size() == 100);
  for (const auto& r : log.rows) {
    CHECK(r.lr == lr_at(arm.policy, r.update_index));
    CHECK(r.momentum == momentum_at(arm.policy, arm.momentum, r.update_index));
  }
  const Arm fixed{"constant", SchedulePolicy::constant(1e-3), {}};
  CHECK(schedule_log(fixed, 3, 0.9).rows[2].momentum == 0.9);
}

TEST_CASE("lr_find endpoints and validation") {
  PpoConfig c = PpoConfig::defaults_for("cartpole");
  c.rollout_steps = 32;
  c.minibatch_size = 64;
  const auto r = lr_find("cartpole", 1e-5, 1e-4, 2, 1, c);
  REQUIRE(r.points.size() == 2);
  CHECK(r.points[0].lr == 1e-5);
  CHECK(r.points[1].lr == 1e-4);
  CHECK(!r.diverged);
  CHECK_THROWS_AS(lr_find("cartpole", 1e-3, 1e-3, 10, 1, c), std::invalid_argument);
  CHECK_THROWS_AS(lr_find("cartpole", 1e-2, 1e-3, 10, 1, c), std::invalid_argument);
  CHECK_THROWS_AS(lr_find("cartpole", 1e-5, 1e-3, 1, 1, c), std::invalid_argument);
}

TEST_CASE("lr_find learning rate rises linearly and the CSV round-trips") {
  PpoConfig c = PpoConfig::defaults_for("cartpole");
  c.rollout_steps = 32;
  c.minibatch_size = 64;
  const auto r = lr_find("cartpole", 1e-5, 1e-3, 11, 2, c);
  for (std::size_t k = 0; k < r.points.size(); ++k) {
    CHECK(r.points[k].update == k);
    CHECK(r.points[k].lr == doctest::Approx(1e-5 + (1e-3 - 1e-5) * k / 10.0).epsilon(1e-12));
  }
  std::istringstream in(lrfind_to_csv(r));
  CHECK(parse_lrfind(in) == r);
  std::istringstream bad("update,lr,total_loss\n0,x,1\n");
  CHECK_THROWS_WITH_AS(parse_lrfind(bad, "f.csv"), doctest::Contains("f.csv:2:"), std::runtime_error);
}
