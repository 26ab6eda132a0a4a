#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "json.hpp"
#include "ppadf/adf.hpp"
#include "ppadf/config.hpp"
#include "ppadf/io.hpp"

using namespace ppadf;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kCli = PPADF_CLI;
const fs::path kConfigs = PPADF_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ppadf_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config(const std::string& name) { return (kConfigs / name).string(); }

void check_manifest(const fs::path& dir) {
  const json m = json::parse(read_file(dir / "manifest.json"));
  CHECK_FALSE(m["outputs"].empty());
  for (const auto& o : m["outputs"])
    CHECK(o["sha256"] == sha256_hex(read_file(dir / o["file"].get<std::string>())));
}

}  // namespace

TEST_CASE("simulate is byte-identical per seed") {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b"), c = scratch("sim_c");
  REQUIRE(run("simulate --config " + config("tracking_high_rate.json") + " --seed 7 --out-dir " + a.string()) == 0);
  REQUIRE(run("simulate --config " + config("tracking_high_rate.json") + " --seed 7 --out-dir " + b.string()) == 0);
  REQUIRE(run("simulate --config " + config("tracking_high_rate.json") + " --seed 8 --out-dir " + c.string()) == 0);
  for (const char* f : {"trajectory.csv", "spikes.jsonl", "manifest.json"})
    CHECK(read_file(a / f) == read_file(b / f));
  CHECK(read_file(a / "spikes.jsonl") != read_file(c / "spikes.jsonl"));
  check_manifest(a);
}

TEST_CASE("simulate without observations writes an empty event file") {
  const fs::path dir = scratch("sim_h0");
  json doc = json::parse(read_file(config("tracking_high_rate.json")));
  doc["sensor"]["h"] = 0;
  write_file(dir / "cfg.json", doc.dump());
  REQUIRE(run("simulate --config " + (dir / "cfg.json").string() + " --out-dir " + (dir / "out").string()) == 0);
  CHECK(read_file(dir / "out" / "spikes.jsonl").empty());
  CHECK(read_file(dir / "out" / "trajectory.csv").rfind("t,x1\n", 0) == 0);
  check_manifest(dir / "out");
}

TEST_CASE("filter replays a simulated stream exactly") {
  const fs::path dir = scratch("filter");
  const std::string cfg = config("tracking_high_rate.json");
  REQUIRE(run("simulate --config " + cfg + " --seed 3 --out-dir " + (dir / "sim").string()) == 0);
  REQUIRE(run("filter --config " + cfg + " --spikes " + (dir / "sim" / "spikes.jsonl").string() +
              " --truth " + (dir / "sim" / "trajectory.csv").string() + " --method both --seed 3 --out-dir " +
              (dir / "f").string()) == 0);
  const ExperimentConfig c = load_config(cfg);
  const auto spikes = parse_spikes_jsonl(read_file(dir / "sim" / "spikes.jsonl"));
  const BeliefTrajectory direct = filter_run(spikes, c.model, filter_prior(c), c.filter.dt, c.sim.horizon);
  CHECK(read_file(dir / "f" / "beliefs_adf.csv") == belief_csv(direct));
  const std::string cmp = read_file(dir / "f" / "comparison.csv");
  CHECK(cmp.rfind("t,eps_mu,eps_sigma,ks\n", 0) == 0);
  check_manifest(dir / "f");

  REQUIRE(run("filter --config " + cfg + " --spikes " + (dir / "sim" / "spikes.jsonl").string() +
              " --method both --seed 3 --out-dir " + (dir / "g").string()) == 0);
  CHECK(read_file(dir / "g" / "comparison.csv") == cmp);
  CHECK(read_file(dir / "g" / "beliefs_pf.csv") == read_file(dir / "f" / "beliefs_pf.csv"));
}

TEST_CASE("filter errors map to exit codes") {
  const fs::path dir = scratch("filter_err");
  const std::string cfg = config("tracking_high_rate.json");
  write_file(dir / "unsorted.jsonl",
             "{\"t\": 0.002, \"theta\": [0], \"comp\": 0}\n{\"t\": 0.001, \"theta\": [0], \"comp\": 0}\n");
  CHECK(run("filter --config " + cfg + " --spikes " + (dir / "unsorted.jsonl").string() + " --out-dir " + dir.string()) == 4);
  write_file(dir / "offgrid.jsonl", "{\"t\": 0.0015, \"theta\": [0], \"comp\": 0}\n");
  CHECK(run("filter --config " + cfg + " --spikes " + (dir / "offgrid.jsonl").string() + " --out-dir " + dir.string()) == 2);
  CHECK(run("filter --config " + cfg + " --spikes " + (dir / "missing.jsonl").string() + " --out-dir " + dir.string()) == 4);
  CHECK(run("filter --config " + cfg + " --out-dir " + dir.string()) == 2);
  CHECK(run("filter --config " + cfg + " --spikes x --method kalman") == 2);
  json doc = json::parse(read_file(cfg));
  doc["sensor"]["R"] = -1;
  write_file(dir / "bad.json", doc.dump());
  CHECK(run("simulate --config " + (dir / "bad.json").string() + " --out-dir " + dir.string()) == 2);
  CHECK(run("simulate --config " + cfg + " --out-dir /proc/forbidden") == 4);
  // a filter step too coarse for the decay rate loses positive definiteness
  doc = json::parse(read_file(cfg));
  doc["dynamics"]["A"] = -5000.0;
  doc["sim"]["init"] = "fixed";
  doc["sim"]["x0"] = 0.0;
  write_file(dir / "stiff.json", doc.dump());
  write_file(dir / "none.jsonl", "");
  CHECK(run("filter --config " + (dir / "stiff.json").string() + " --spikes " + (dir / "none.jsonl").string() +
            " --out-dir " + dir.string()) == 3);
}

TEST_CASE("sweep output does not depend on the worker count") {
  const fs::path a = scratch("sweep_a"), b = scratch("sweep_b"), c = scratch("sweep_c");
  const std::string args = "sweep --config " + config("encoding_wide_prior.json") +
                           " --grid 'c=0,2;sigma_pop2=1,10' --trials 4 --window 1:2 --seed 5 --out-dir ";
  REQUIRE(run(args + a.string() + " --jobs 1") == 0);
  REQUIRE(run(args + b.string() + " --jobs 8") == 0);
  REQUIRE(run(args + c.string(), "PPADF_JOBS=3") == 0);
  CHECK(read_file(a / "sweep.csv") == read_file(b / "sweep.csv"));
  CHECK(read_file(a / "sweep.csv") == read_file(c / "sweep.csv"));
  CHECK(read_file(a / "manifest.json") == read_file(b / "manifest.json"));
  check_manifest(a);
  CHECK(run("sweep --config " + config("encoding_wide_prior.json") + " --grid 'bogus=1' --out-dir " + a.string()) == 2);
  CHECK(run("sweep --config " + config("encoding_wide_prior.json") + " --window 2:1 --out-dir " + a.string()) == 2);
}

TEST_CASE("compare-uniform output does not depend on the worker count") {
  const fs::path a = scratch("cu_a"), b = scratch("cu_b");
  const std::string args = "compare-uniform --config " + config("static_narrow_population.json") +
                           " --trials 4 --sigma-pop-list 0.5,8 --window 5:10 --seed 2 --out-dir ";
  REQUIRE(run(args + a.string() + " --jobs 1") == 0);
  REQUIRE(run(args + b.string() + " --jobs 8") == 0);
  for (const char* f : {"compare_uniform.csv", "compare_uniform_trials.csv", "compare_uniform_summary.json"})
    CHECK(read_file(a / f) == read_file(b / f));
  CHECK(read_file(a / "compare_uniform.csv").rfind("sigma_pop2,mse_adf,se_adf,mse_uniform,se_uniform", 0) == 0);
  check_manifest(a);
  CHECK(run("compare-uniform --config " + config("static_narrow_population.json") + " --sigma-pop-list 0.5,x --out-dir " +
            a.string()) == 2);
}

TEST_CASE("compare-pf output does not depend on the worker count") {
  const fs::path a = scratch("pf_a"), b = scratch("pf_b");
  const std::string args = "compare-pf --config " + config("tracking_low_rate.json") + " --trials 2 --seed 4 --out-dir ";
  REQUIRE(run(args + a.string() + " --jobs 1") == 0);
  REQUIRE(run(args + b.string() + " --jobs 2") == 0);
  CHECK(read_file(a / "compare_pf_records.csv") == read_file(b / "compare_pf_records.csv"));
  CHECK(read_file(a / "compare_pf_summary.json") == read_file(b / "compare_pf_summary.json"));
}

TEST_CASE("usage errors") {
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("--help") == 0);
}
