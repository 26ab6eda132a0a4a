#include <cmath>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "ppadf/config.hpp"
#include "ppadf/errors.hpp"
#include "ppadf/rng.hpp"
#include "ppadf/sweep.hpp"

using namespace ppadf;
using namespace testing_helpers;
using nlohmann::json;

namespace {

json encoding_wide_prior() {
  return json::parse(R"({
    "dynamics": {"A": -0.05, "b": 0, "D": 1},
    "sensor": {"h": 50, "H": 1, "R": 1},
    "population": {"type": "gaussian", "c": 0, "sigma_pop": 1},
    "sim": {"dt": 0.001, "T": 2, "init": "steady_state"},
    "filter": {"dt": 0.001, "init": "steady_state"}
  })");
}

json static_uniform_compare() {
  return json::parse(R"({
    "dynamics": {"A": 0, "b": 0, "D": 0},
    "sensor": {"h": 10, "H": 1, "R": 10},
    "population": {"type": "gaussian", "c": 0, "sigma_pop": 0.5},
    "sim": {"dt": 0.001, "T": 3, "init": "prior"},
    "filter": {"dt": 0.001, "init": "given", "mu0": 0, "sigma0": 1}
  })");
}

}  // namespace

TEST_CASE("grid parsing") {
  const auto axes = parse_grid("c=0,0.5;sigma_pop2=1,2,3");
  REQUIRE(axes.size() == 2);
  CHECK(axes[0].pointer == "/population/c/0");
  CHECK(axes[1].pointer == "/population/sigma_pop/0/0");
  CHECK(axes[1].values == std::vector<double>{1, 2, 3});
  CHECK(parse_grid("/sensor/h=1,2")[0].pointer == "/sensor/h");
  CHECK_THROWS_AS(parse_grid("c"), ConfigError);
  CHECK_THROWS_AS(parse_grid("zeta=1"), ConfigError);
  CHECK_THROWS_AS(parse_grid("c=1,x"), ConfigError);
}

TEST_CASE("no observations on a static state leave the prior untouched") {
  json doc = encoding_wide_prior();
  doc["dynamics"]["A"] = 0.0;
  doc["dynamics"]["D"] = 0.0;
  doc["sensor"]["h"] = 0.0;
  doc["sim"]["init"] = "prior";
  doc["filter"] = {{"init", "given"}, {"mu0", 0.0}, {"sigma0", 2.0}};
  const ExperimentConfig cfg = parse_config(doc);
  const CellResult cell = run_cell(cfg, 3, 1.0, 2.0, 5);
  CHECK(cell.mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cell.n_divergent == 0);
}

TEST_CASE("a single trial has no standard error") {
  const CellResult cell = run_cell(parse_config(encoding_wide_prior()), 1, 1.0, 2.0, 5);
  CHECK_FALSE(cell.se.has_value());
  CHECK(cell.n_trials == 1);
}

TEST_CASE("one-cell sweep equals run_cell and jobs do not matter") {
  SweepSpec spec;
  spec.base = to_json(parse_config(encoding_wide_prior()));
  spec.axes = parse_grid("c=0,1;sigma_pop2=5,20");
  spec.trials = 6;
  spec.t0 = 1.0;
  spec.t1 = 2.0;
  spec.seed = 42;
  const SweepResult serial = run_sweep(spec, 1);
  const SweepResult threaded = run_sweep(spec, 4);
  CHECK(sweep_csv(serial) == sweep_csv(threaded));
  REQUIRE(serial.cells.size() == 4);
  CHECK(serial.cells[1].coords == std::vector<double>{0, 20});

  // cell 2 is (c=1, sigma_pop2=5); recompute it directly
  json doc = spec.base;
  doc["population"]["c"] = json::array({1.0});
  doc["population"]["sigma_pop"] = json::array({json::array({5.0})});
  const CellResult direct =
      run_cell(parse_config(doc), spec.trials, 1.0, 2.0, stable_hash({spec.seed, 2}));
  CHECK(direct.mean == serial.cells[2].mean);
  CHECK(*direct.se == *serial.cells[2].se);
}

TEST_CASE("sweep CSV layout") {
  SweepSpec spec;
  spec.base = to_json(parse_config(encoding_wide_prior()));
  spec.axes = parse_grid("c=0;sigma_pop2=10");
  spec.trials = 1;
  spec.t0 = 1.0;
  spec.t1 = 2.0;
  const std::string csv = sweep_csv(run_sweep(spec));
  CHECK(csv.rfind("c,sigma_pop2,mean_rel_sd,se,n_trials,n_divergent\n", 0) == 0);
  CHECK(csv.find(",,1,") != std::string::npos);  // absent se
}

TEST_CASE("trial seeds of distinct cells never collide") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t cell = 0; cell < 100; ++cell)
    for (std::uint64_t trial = 0; trial < 1000; ++trial)
      seen.insert(stable_hash({stable_hash({7, cell}), trial}));
  CHECK(seen.size() == 100000);
}

TEST_CASE("mirror-image cells agree") {
  json doc = encoding_wide_prior();
  doc["dynamics"]["D"] = 0.3162;
  doc["population"]["sigma_pop"] = 0.5;
  auto cell_at = [&](double c) {
    json d = doc;
    d["population"]["c"] = c;
    return run_cell(parse_config(d), 200, 1.0, 2.0, 11);
  };
  const CellResult plus = cell_at(0.8), minus = cell_at(-0.8);
  const double pooled = std::hypot(*plus.se, *minus.se);
  CHECK(std::abs(plus.mean - minus.mean) <= 2 * pooled);
}

TEST_CASE("a prior-matched population beats a very broad one") {
  // prior variance d^2 / (2 |a|) = 10
  auto cell_at = [](double spread) {
    json d = encoding_wide_prior();
    d["population"]["sigma_pop"] = spread;
    return run_cell(parse_config(d), 200, 1.0, 2.0, 3);
  };
  const CellResult matched = cell_at(10.0), broad = cell_at(1000.0);
  CHECK(matched.mean < broad.mean);
}

TEST_CASE("compare_uniform replays one stream through both filters") {
  const ExperimentConfig cfg = parse_config(static_uniform_compare());
  const Observations obs = simulate_trial(cfg, 17);
  const UniformTrial t = compare_uniform_trial(cfg, obs.trajectory, obs.spikes, 1.0, 3.0);
  const BeliefTrajectory full = filter_run(obs.spikes, cfg.model, filter_prior(cfg), 1e-3, 3.0);
  FilterOptions off;
  off.continuous_terms = false;
  const BeliefTrajectory uni = filter_run(obs.spikes, cfg.model, filter_prior(cfg), 1e-3, 3.0, off);
  CHECK(t.mse_adf == mse_window(obs.trajectory, full, 1.0, 3.0));
  CHECK(t.mse_uniform == mse_window(obs.trajectory, uni, 1.0, 3.0));
}

TEST_CASE("a very broad population makes both filters coincide") {
  json doc = static_uniform_compare();
  doc["population"]["sigma_pop"] = 1e12;
  const ExperimentConfig cfg = parse_config(doc);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Observations obs = simulate_trial(cfg, seed);
    const UniformTrial t = compare_uniform_trial(cfg, obs.trajectory, obs.spikes, 1.0, 3.0);
    CHECK(std::abs(t.mse_adf - t.mse_uniform) <= 1e-10);
  }
}

TEST_CASE("compare_uniform summary is the paired difference") {
  const ExperimentConfig cfg = parse_config(static_uniform_compare());
  const UniformComparison cmp = compare_uniform(cfg, 12, 1.0, 3.0, 9, 3);
  REQUIRE(cmp.trials.size() == 12);
  double diff = 0.0;
  for (const auto& t : cmp.trials) diff += t.mse_uniform - t.mse_adf;
  CHECK(cmp.difference.mean == doctest::Approx(diff / 12).epsilon(1e-12));
  const UniformComparison again = compare_uniform(cfg, 12, 1.0, 3.0, 9, 1);
  CHECK(again.adf.mean == cmp.adf.mean);
  CHECK(*again.difference.se == *cmp.difference.se);
  json bad = static_uniform_compare();
  bad["population"] = {{"type", "uniform"}};
  CHECK_THROWS_AS(compare_uniform(parse_config(bad), 2, 1.0, 3.0, 1), ConfigError);
}

TEST_CASE("compare_pf without observations") {
  json doc = encoding_wide_prior();
  doc["sensor"]["h"] = 0.0;
  doc["sim"]["T"] = 0.2;
  doc["filter"] = {{"init", "given"}, {"mu0", 0.0}, {"sigma0", 1.0}, {"particles", 2000}};
  const PfComparison cmp = compare_pf(parse_config(doc), 2, 1);
  CHECK(cmp.excluded_trials == 0);
  CHECK(cmp.records.size() == 400);
  // PF sampling noise only: sd / sqrt(P) relative to sd
  CHECK(std::abs(cmp.pooled.eps_mu.mean) < 0.1);
  CHECK(std::abs(cmp.pooled.eps_sigma.mean - 1.0) < 0.1);
}

TEST_CASE("parallel_for rethrows the first failure by index") {
  std::vector<int> hit(20, 0);
  CHECK_THROWS_WITH(parallel_for(20, 4,
                                 [&](std::size_t i) {
                                   hit[i] = 1;
                                   if (i == 7 || i == 13) throw std::runtime_error(std::to_string(i));
                                 }),
                    "7");
  int total = 0;
  for (int h : hit) total += h;
  CHECK(total == 20);
}
