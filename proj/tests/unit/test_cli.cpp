#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trackgp/cli/commands.hpp"
#include "trackgp/cli/config.hpp"
#include "trackgp/cli/io.hpp"

using namespace trackgp;
using namespace trackgp::cli;
namespace fs = std::filesystem;

namespace {

const std::string kSource = TRACKGP_SOURCE_DIR;

struct Scratch {
  fs::path root;
  Scratch() {
    root = fs::temp_directory_path() / ("trackgp_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Scratch() { fs::remove_all(root); }
  std::string path(const std::string& name) const { return (root / name).string(); }
};

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "trackgp");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  Result r;
  r.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string example1_cfg() { return kSource + "/configs/example1_asymptotic.cfg"; }

const char* kMinimal =
    "system.a = 0.9\n"
    "system.b = 0.5\n"
    "system.x_lo = -2\n"
    "system.x_hi = 0.05\n"
    "system.u_lo = -0.5\n"
    "system.u_hi = 0.5\n"
    "system.ts = 0.01\n";

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(std::string(kMinimal) +
                              "# comment\n\n"
                              "kernel.family = periodic\n"
                              "kernel.theta_lo = 1e-3, 1e-2, 2.5\n"
                              "kernel.theta_hi = 1e2, 1e2, 4\n"
                              "mode = periodic\n"
                              "periodic.k_bar = 40\n"
                              "seed = 9\n");
  CHECK(c.system.a == 0.9);
  CHECK(c.system.state_box.hi == 0.05);
  CHECK(c.system.sampling_time == 0.01);
  CHECK(c.family == KernelFamily::Periodic);
  CHECK(c.mode == TrainMode::Periodic);
  CHECK(c.k_bar == 40);
  CHECK(c.seed == 9);
  REQUIRE(c.optimizer.search_box.lower.size() == 3);
  CHECK(c.optimizer.search_box.upper(2) == 4.0);
  CHECK(c.periodic_config().optimizer.rng_seed == 9);
  CHECK(c.periodic_config().k_bar == 40);
}

TEST_CASE("config errors name the line") {
  auto message = [](const std::string& text) -> std::string {
    try {
      parse_config(text);
    } catch (const ParseError& e) {
      return e.what();
    } catch (const ConfigError& e) {
      return std::string("config: ") + e.what();
    }
    return "";
  };
  CHECK(message(std::string(kMinimal) + "system.colour = 3\n").find("line 8") != std::string::npos);
  CHECK(message(std::string(kMinimal) + "system.a = 1\n").find("line 8") != std::string::npos);
  CHECK(message(std::string(kMinimal) + "seed = many\n").find("line 8") != std::string::npos);
  CHECK(message(std::string(kMinimal) + "just words\n").find("line 8") != std::string::npos);
  CHECK(message("system.x_lo = 1\nsystem.x_hi = 0\n").rfind("config: ", 0) == 0);
  CHECK(message(std::string(kMinimal) + "mode = periodic\n").rfind("config: ", 0) == 0);
  CHECK(message(std::string(kMinimal)).empty());
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"example1_asymptotic.cfg", "example2_periodic.cfg", "example1_unconstrained.cfg",
                           "example2_unconstrained.cfg"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_config(kSource + "/configs/" + name));
  }
  CHECK_THROWS_AS(load_config(kSource + "/configs/missing.cfg"), ConfigError);
}

TEST_CASE("ingest examples") {
  const Dataset d = parse_data_csv("t,y\n0,1\n1,2");
  CHECK(d.size() == 2);
  const Dataset u = parse_data_csv("t,y\n2,5\n0,1\n1,3\n");
  REQUIRE(u.size() == 3);
  CHECK(u.times()(0) == 0.0);
  CHECK(u.values()(0) == 1.0);
  CHECK(u.values()(2) == 5.0);
  CHECK(std::accumulate(u.values().begin(), u.values().end(), 0.0) == 9.0);
}

TEST_CASE("ingest errors carry line numbers") {
  auto message = [](const std::string& text) -> std::string {
    try {
      parse_data_csv(text);
    } catch (const ParseError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message("t,y\n0,1\n1,2\n0,3\n").find("line 4") != std::string::npos);
  CHECK(message("t,y\n0,1\n1,abc\n").find("line 3") != std::string::npos);
  CHECK(message("t,y\n0,1\n1,nan\n").find("line 3") != std::string::npos);
  CHECK(message("t,y\n0,inf\n").find("line 2") != std::string::npos);
  CHECK(message("t,y\n0,1,2\n").find("line 2") != std::string::npos);
  CHECK(message("t,y\n-1,1\n").find("line 2") != std::string::npos);
  CHECK(message("time,value\n0,1\n").find("line 1") != std::string::npos);
  CHECK(message("").find("empty") != std::string::npos);
  CHECK(message("t,y\n").find("no rows") != std::string::npos);
  CHECK(message("t,y\n0,1\n").empty());
}

TEST_CASE("generator") {
  GeneratorConfig g;
  g.kind = GeneratorKind::PeriodicExample;
  g.n = 30;
  g.t_start = 0;
  g.t_end = 6.283185307179586;
  g.endpoint = false;
  const auto a = generate_data(g, 3);
  REQUIRE(a.size() == 30);
  for (const auto& p : a) CHECK(p.y == std::sin(2 * p.t) + 0.5 * std::sin(4 * p.t + 1));
  CHECK(a[1].t == doctest::Approx(6.283185307179586 / 30));

  g.n = 1000;
  g.noise_std = 0.1;
  const auto noisy = generate_data(g, 5);
  double sum = 0, sq = 0;
  for (const auto& p : noisy) {
    const double r = p.y - (std::sin(2 * p.t) + 0.5 * std::sin(4 * p.t + 1));
    sum += r;
    sq += r * r;
  }
  const double mean = sum / 1000;
  const double sd = std::sqrt(sq / 1000 - mean * mean);
  CHECK(sd >= 0.07);
  CHECK(sd <= 0.13);

  const auto again = generate_data(g, 5);
  const auto other = generate_data(g, 6);
  CHECK(again[17].y == noisy[17].y);
  CHECK(other[17].y != noisy[17].y);

  GeneratorConfig t;
  const auto tr = generate_data(t, 1);
  REQUIRE(tr.size() == 12);
  CHECK(tr.back().t == doctest::Approx(0.55));
  CHECK(tr[0].y == -1.0);
}

TEST_CASE("generate command is deterministic") {
  Scratch s;
  REQUIRE(run_cli({"generate", "--config", example1_cfg(), "--out", s.path("a")}).code == 0);
  REQUIRE(run_cli({"generate", "--config", example1_cfg(), "--out", s.path("b")}).code == 0);
  const std::string a = read_file(s.path("a/data.csv"));
  CHECK(a == read_file(s.path("b/data.csv")));
  CHECK(a.rfind("t,y\n", 0) == 0);
  CHECK(parse_data_csv(a).size() == 12);
}

TEST_CASE("check command exit codes") {
  Scratch s;
  write_file(s.path("zero.csv"), "t,y\n0,0\n0.01,0\n0.02,0\n0.03,0\n");
  const auto ok = run_cli({"check", "--config", example1_cfg(), "--data", s.path("zero.csv"), "--out", s.path("ok")});
  CHECK(ok.code == kExitOk);
  const auto j = nlohmann::json::parse(read_file(s.path("ok/check.json")));
  CHECK(j["trackable"] == true);
  CHECK(j["samples"] == 4);

  write_file(s.path("state.csv"), "t,y\n0,0\n0.01,0\n0.02,0\n0.03,0.2\n0.04,0\n");
  const auto st = run_cli({"check", "--config", example1_cfg(), "--data", s.path("state.csv"), "--out", s.path("st")});
  CHECK(st.code == kExitUntrackable);
  const auto js = nlohmann::json::parse(read_file(s.path("st/check.json")));
  CHECK(js["trackable"] == false);
  // The step into the violating sample needs u = 0.4, admissible; x(3) itself leaves X.
  CHECK(js["first_violation_index"] == 3);
  CHECK(js["violation_kind"] == "state_constraint");

  write_file(s.path("input.csv"), "t,mean\n0,0\n0.01,-1\n");
  const auto in = run_cli({"check", "--config", example1_cfg(), "--data", s.path("input.csv"), "--out", s.path("in")});
  CHECK(in.code == kExitUntrackable);
  const auto ji = nlohmann::json::parse(read_file(s.path("in/check.json")));
  CHECK(ji["violation_kind"] == "no_admissible_input");
  CHECK(ji["first_violation_index"] == 0);

  write_file(s.path("bad.csv"), "t,y\n0,0\n0.01,zz\n");
  const auto bad = run_cli({"check", "--config", example1_cfg(), "--data", s.path("bad.csv"), "--out", s.path("bad")});
  CHECK(bad.code == kExitError);
  CHECK(bad.err.find("line 3") != std::string::npos);
}

TEST_CASE("train, predict and simulate on an uncertified outcome") {
  Scratch s;
  const std::string cfg = kSource + "/configs/example1_unconstrained.cfg";
  REQUIRE(run_cli({"generate", "--config", cfg, "--out", s.path("run")}).code == 0);
  const std::string data = s.path("run/data.csv");
  const auto train = run_cli({"train", "--config", cfg, "--data", data, "--out", s.path("run")});
  REQUIRE(train.code == kExitOk);
  const auto outcome = nlohmann::json::parse(read_file(s.path("run/outcome.json")));
  CHECK(outcome["mode"] == "unconstrained");
  CHECK(outcome["status"] == "unconstrained");
  CHECK(outcome["certified"] == false);
  const std::string prediction = read_file(s.path("run/prediction.csv"));
  CHECK(prediction.rfind("t,mean,variance,mean_bound,deriv_bound,tube_lower,tube_upper\n", 0) == 0);

  const auto predict = run_cli({"predict", "--config", cfg, "--data", data, "--outcome", s.path("run/outcome.json"),
                                "--out", s.path("pred")});
  CHECK(predict.code == kExitOk);
  CHECK(read_file(s.path("pred/prediction.csv")) == prediction);

  // The unconstrained fit leaves X on this data.
  const auto check = run_cli({"check", "--config", cfg, "--data", s.path("run/prediction.csv"), "--out", s.path("run")});
  CHECK(check.code == kExitUntrackable);

  const auto sim = run_cli({"simulate", "--config", cfg, "--data", data, "--outcome", s.path("run/outcome.json"),
                            "--out", s.path("sim")});
  CHECK(sim.code == kExitError);
  CHECK(sim.err.find("error:") == 0);
  CHECK_FALSE(fs::exists(s.path("sim/simulation.csv")));
}

TEST_CASE("argument errors") {
  CHECK(run_cli({}).code == kExitError);
  CHECK(run_cli({"train", "--config", example1_cfg()}).code == kExitError);
  CHECK(run_cli({"bogus"}).code == kExitError);
  CHECK(run_cli({"generate", "--config", "/nonexistent.cfg"}).code == kExitError);
}
