#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "ppadf/config.hpp"
#include "ppadf/errors.hpp"
#include "ppadf/io.hpp"
#include "ppadf/simulate.hpp"

using namespace ppadf;
using namespace testing_helpers;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json reference_doc() {
  return json::parse(R"({
    "dynamics": {"A": -0.1, "b": 0, "D": 1},
    "sensor": {"h": 1000, "H": 1, "R": 4},
    "population": {"type": "gaussian", "c": 0, "sigma_pop": 4},
    "sim": {"dt": 0.001, "T": 1, "init": "steady_state"},
    "filter": {"dt": 0.001, "init": "given", "mu0": 0, "sigma0": 1}
  })");
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ppadf_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config parses scalar shorthand") {
  const ExperimentConfig cfg = parse_config(reference_doc());
  CHECK(cfg.model.dynamics.drift(0, 0) == -0.1);
  CHECK(cfg.model.sensor.precision(0, 0) == 4.0);
  CHECK(std::get<GaussianPopulation>(cfg.model.population).spread(0, 0) == 4.0);
  CHECK(cfg.sim.init == SimInit::kSteadyState);
  CHECK(cfg.filter.particles == 1000);
  CHECK(filter_prior(cfg).cov(0, 0) == 1.0);
}

TEST_CASE("config round-trips through its canonical form") {
  std::vector<json> docs{reference_doc()};
  json mix = reference_doc();
  mix["population"] = json::parse(R"({"type": "mixture", "components": [
      {"weight": 0.3, "sensor": {"h": 5, "R": 2}, "population": {"type": "interval", "a": -1, "b": 2}},
      {"weight": 0.7, "sensor": {"h": 9, "R": 1}, "population": {"type": "single", "theta": 0.4}},
      {"weight": 1.0, "sensor": {"h": 1, "R": 3}, "population": {"type": "uniform"}}]})");
  docs.push_back(mix);
  json two = json::parse(R"({
    "dynamics": {"A": [[-1, 0.2], [0, -0.5]], "b": [0.1, 0], "D": [[1, 0, 0.3], [0, 1, 0]]},
    "sensor": {"h": 20, "H": [[1, 0]], "R": [[2]]},
    "population": {"type": "uniform"},
    "sim": {"dt": 0.002, "T": 3, "init": "fixed", "x0": [0.5, -0.5]},
    "filter": {"dt": 0.001, "init": "steady_state", "jitter": true, "particles": 50,
               "resample": "ess", "ess_fraction": 0.3}
  })");
  docs.push_back(two);
  for (const auto& d : docs) {
    const json once = to_json(parse_config(d));
    const json twice = to_json(parse_config(once));
    CHECK(once == twice);
    CHECK(once.dump() == twice.dump());
  }
  const ExperimentConfig c2 = parse_config(two);
  CHECK(c2.filter.dt == 0.001);
  CHECK(c2.filter.jitter);
  CHECK(c2.filter.resample == ResampleMode::kEffectiveSampleSize);
  CHECK(c2.model.dynamics.diffusion.cols() == 3);
}

TEST_CASE("config errors") {
  json d = reference_doc();
  d["extra"] = 1;
  CHECK_THROWS_AS(parse_config(d), ConfigError);
  d = reference_doc();
  d["sensor"]["h"] = -1;
  CHECK_THROWS_AS(parse_config(d), ModelError);
  d = reference_doc();
  d["population"]["type"] = "mystery";
  CHECK_THROWS_AS(parse_config(d), ConfigError);
  d = reference_doc();
  d["filter"]["dt"] = 0.0003;
  CHECK_THROWS_AS(parse_config(d), ConfigError);
  d = reference_doc();
  d["dynamics"]["A"] = 0.0;
  CHECK_THROWS_AS(parse_config(d), ConfigError);  // steady state needs a stable drift
  d = reference_doc();
  d["sensor"]["R"] = "four";
  CHECK_THROWS_AS(parse_config(d), ConfigError);
  d = reference_doc();
  d["dynamics"]["A"] = json::array({json::array({1, 2}), json::array({3})});
  CHECK_THROWS_AS(parse_config(d), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("initial state draws") {
  ExperimentConfig cfg = parse_config(reference_doc());
  CHECK(draw_initial_state(cfg, 4) == draw_initial_state(cfg, 4));
  CHECK(draw_initial_state(cfg, 4) != draw_initial_state(cfg, 5));
  cfg.sim.init = SimInit::kFixed;
  cfg.sim.x0 = vec1(0.25);
  CHECK(draw_initial_state(cfg, 4)(0) == 0.25);
}

TEST_CASE("format_double keeps 17 significant digits") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-10) == "-2.5000000000000002e-10");
  for (double v : {0.1, 1.0 / 3.0, 123456.789, -1e-300, 6.02214076e23})
    CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("trajectory, belief and spike files round-trip") {
  Trajectory t;
  t.dt = 1e-3;
  t.states = {(Vector(2) << 0.1, 1.0 / 3).finished(), (Vector(2) << -2e-7, 5.5).finished()};
  const Trajectory t2 = parse_trajectory_csv(trajectory_csv(t));
  CHECK(t2.dt == t.dt);
  CHECK(t2.states == t.states);
  CHECK(trajectory_csv(t).rfind("t,x1,x2\n", 0) == 0);

  BeliefTrajectory b;
  b.dt = 0.01;
  b.beliefs = {{(Vector(2) << 0.1, 0.2).finished(), (Matrix(2, 2) << 1, 0.5, 0.5, 2).finished()},
               {(Vector(2) << 1.0 / 7, 0.0).finished(), (Matrix(2, 2) << 0.3, 0.1, 0.1, 0.2).finished()}};
  const std::string csv = belief_csv(b);
  CHECK(csv.rfind("t,mu_1,mu_2,sigma_11,sigma_12,sigma_21,sigma_22\n", 0) == 0);
  const BeliefTrajectory b2 = parse_belief_csv(csv);
  REQUIRE(b2.size() == 2);
  CHECK(b2.dt == b.dt);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(b2.beliefs[k].mean == b.beliefs[k].mean);
    CHECK(b2.beliefs[k].cov == b.beliefs[k].cov);
  }

  const std::vector<SpikeEvent> spikes{{0.011, vec1(1.0 / 3), 0}, {0.5, vec1(-2.0), 2}};
  const std::string jsonl = spikes_jsonl(spikes);
  CHECK(jsonl.substr(0, jsonl.find('\n')) ==
        R"({"t": 0.010999999999999999, "theta": [0.33333333333333331], "comp": 0})");
  const auto s2 = parse_spikes_jsonl(jsonl);
  REQUIRE(s2.size() == 2);
  CHECK(s2[0].t == spikes[0].t);
  CHECK(s2[0].mark == spikes[0].mark);
  CHECK(s2[1].component == 2);
  CHECK(parse_spikes_jsonl("").empty());
}

TEST_CASE("spike file errors name the line") {
  try {
    parse_spikes_jsonl("{\"t\": 0.2, \"theta\": [0], \"comp\": 0}\n{\"t\": 0.1, \"theta\": [0], \"comp\": 0}\n");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  try {
    parse_spikes_jsonl("{\"t\": 0.2, \"theta\": [0], \"comp\": 0}\n\n{\"t\": oops}\n");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("sha256 and manifests") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const fs::path dir = scratch_dir("manifest");
  RunManifest m;
  m.command = "simulate";
  m.config = to_json(parse_config(reference_doc()));
  m.seed = 7;
  m.warnings = {"careful"};
  m.write_output(dir, "a.csv", "t,x1\n0,1\n");
  m.write_output(dir, "b.jsonl", "");
  m.save(dir);
  const json saved = json::parse(read_file(dir / "manifest.json"));
  CHECK(saved["seed"] == 7);
  CHECK(saved["tool_version"] == kToolVersion);
  REQUIRE(saved["outputs"].size() == 2);
  for (const auto& o : saved["outputs"])
    CHECK(o["sha256"] == sha256_hex(read_file(dir / o["file"].get<std::string>())));
  CHECK(read_file(dir / "manifest.json") == m.to_json().dump(2) + "\n");
  CHECK_THROWS_AS(write_file("/nonexistent/dir/x", "y"), IoError);
}
