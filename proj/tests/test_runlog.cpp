#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cyclr/runlog.hpp"
#include "cyclr/common.hpp"
#include "doctest.h"
#include "tmpdir.hpp"

using namespace cyclr;

namespace {

RunLog random_log(Rng& rng) {
  RunLog log;
  log.run_id = "cartpole-tri-seed" + std::to_string(rng.next() % 10);
  log.arm = "triangular";
  log.env_id = "cartpole";
  log.seed = rng.next();
  log.diverged = rng.next() % 2 == 0;
  std::uint64_t step = 0;
  const int n = static_cast<int>(rng.next() % 30);
  for (int i = 0; i < n; ++i) {
    RunRow r;
    step += 1 + rng.next() % 300;
    r.env_step = step;
    r.update_index = static_cast<std::uint64_t>(i / 3);
    auto maybe = [&](double v) -> std::optional<double> {
      return rng.uniform(0.0, 1.0) < 0.5 ? std::optional<double>(v) : std::nullopt;
    };
    r.episode_reward = maybe(std::floor(rng.uniform(0, 200)));
    r.lr = std::exp(rng.uniform(-12, -2));
    r.momentum = rng.uniform(0.8, 1.0);
    r.policy_loss = maybe(rng.normal() * 1e-3);
    r.value_loss = maybe(std::exp(rng.uniform(-5, 8)));
    r.entropy = maybe(rng.uniform(0, 1));
    r.approx_kl = maybe(rng.normal() * 1e-7);
    log.rows.push_back(r);
  }
  return log;
}

}  // namespace

TEST_CASE("format_double round-trips") {
  Rng rng(1);
  for (int i = 0; i < 5000; ++i) {
    const double x = rng.normal() * std::exp(rng.uniform(-300, 300));
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-4) == "1e-04");
  CHECK(format_double(200.0) == "200");
}

TEST_CASE("CSV round trip reproduces the log") {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const RunLog log = random_log(rng);
    std::istringstream in(runlog_to_csv(log));
    CHECK(parse_runlog(in) == log);
  }
}

TEST_CASE("CSV layout") {
  RunLog log;
  log.run_id = "r";
  log.arm = "constant";
  log.env_id = "cartpole";
  log.seed = 3;
  RunRow a;
  a.env_step = 17;
  a.episode_reward = 17.0;
  a.lr = 0.001;
  a.momentum = 0.9;
  RunRow b;
  b.env_step = 1024;
  b.lr = 0.001;
  b.momentum = 0.9;
  b.policy_loss = -0.5;
  b.value_loss = 2.0;
  b.entropy = 0.69;
  b.approx_kl = 0.001;
  log.rows = {a, b};
  const std::string csv = runlog_to_csv(log);
  CHECK(csv.find(std::string(kRunLogHeader) + "\n") != std::string::npos);
  CHECK(runlog_rows_csv(log) == "17,0,17,0.001,0.9,,,,\n1024,0,,0.001,0.9,-0.5,2,0.69,0.001\n");
  CHECK(log.episode_rewards() == std::vector<double>{17.0});
  CHECK(log.episode_steps() == std::vector<std::uint64_t>{17});
}

TEST_CASE("parse errors name the source and line") {
  auto error_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_runlog(in, "run.csv");
    } catch (const std::runtime_error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const std::string header = std::string(kRunLogHeader) + "\n";
  CHECK(error_of("# arm=x\n" + header + "1,0,,0.1,0.9,,,,\n2,0,abc,0.1,0.9,,,,\n").starts_with("run.csv:4:"));
  CHECK(error_of(header + "1,0,,0.1\n").starts_with("run.csv:2:"));
  CHECK(error_of("a,b,c\n").starts_with("run.csv:1:"));
  CHECK(error_of("").starts_with("run.csv:"));
  CHECK(error_of(header + "5,0,,0.1,0.9,,,,\n3,0,,0.1,0.9,,,,\n").starts_with("run.csv:3:"));
}

TEST_CASE("atomic writes create directories and replace files") {
  TempDir tmp;
  const std::string path = tmp.file("deep/nested/run.csv");
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  CHECK(text == "second");
  for (const auto& entry : std::filesystem::directory_iterator(tmp.path / "deep/nested")) {
    CHECK(entry.path().filename() == "run.csv");
  }
  CHECK_THROWS(read_runlog_file(tmp.file("missing.csv")));
}

TEST_CASE("trailing mean") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  CHECK(trailing_mean(v, 2) == std::vector<double>{1.0, 1.5, 2.5, 3.5, 4.5});
  CHECK(trailing_mean(v, 100) == std::vector<double>{1.0, 1.5, 2.0, 2.5, 3.0});
  CHECK(trailing_mean({}, 3).empty());
  Rng rng(5);
  std::vector<double> w(500);
  for (auto& x : w) x = rng.uniform(0, 200);
  const auto m = trailing_mean(w, 100);
  for (std::size_t i = 0; i < w.size(); i += 37) {
    const std::size_t lo = i + 1 >= 100 ? i + 1 - 100 : 0;
    double s = 0.0;
    for (std::size_t j = lo; j <= i; ++j) s += w[j];
    CHECK(m[i] == doctest::Approx(s / static_cast<double>(i + 1 - lo)));
  }
}
