#include "ppadf/config.hpp"

#include <fstream>

#include "ppadf/errors.hpp"
#include "ppadf/rng.hpp"

namespace ppadf {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("config " + where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) fail(where, std::string("missing key '") + key + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

// A bare number is accepted as a length-1 vector.
Vector vector_of(const json& v, const std::string& where) {
  if (v.is_number()) return Vector::Constant(1, v.get<double>());
  if (!v.is_array()) fail(where, "expected an array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = number(v[i], where);
  return out;
}

// A bare number is accepted as 1x1; a flat array as a single row.
Matrix matrix_of(const json& v, const std::string& where) {
  if (v.is_number()) return Matrix::Constant(1, 1, v.get<double>());
  if (!v.is_array()) fail(where, "expected an array of rows");
  if (v.empty()) return Matrix(0, 0);
  if (!v[0].is_array()) {
    const Vector row = vector_of(v, where);
    return row.transpose();
  }
  const auto rows = static_cast<Eigen::Index>(v.size());
  const auto cols = static_cast<Eigen::Index>(v[0].size());
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) fail(where, "ragged matrix");
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = number(row[static_cast<std::size_t>(j)], where);
  }
  return out;
}

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

SensorShape parse_sensor(const json& s, const std::string& where, const Matrix* shared_h) {
  SensorShape out;
  out.peak_rate = number(require(s, "h", where), where + ".h");
  if (s.contains("H")) out.observation = matrix_of(s.at("H"), where + ".H");
  else if (shared_h) out.observation = *shared_h;
  else fail(where, "missing key 'H'");
  out.precision = matrix_of(require(s, "R", where), where + ".R");
  return out;
}

json sensor_json(const SensorShape& s) {
  return {{"h", s.peak_rate}, {"H", to_json(s.observation)}, {"R", to_json(s.precision)}};
}

BasicPopulation parse_basic(const json& p, const std::string& where) {
  const std::string type = require(p, "type", where).get<std::string>();
  if (type == "single") return SingleSensor{vector_of(require(p, "theta", where), where + ".theta")};
  if (type == "uniform") return UniformPopulation{};
  if (type == "gaussian")
    return GaussianPopulation{vector_of(require(p, "c", where), where + ".c"),
                              matrix_of(require(p, "sigma_pop", where), where + ".sigma_pop")};
  if (type == "interval")
    return IntervalPopulation{number(require(p, "a", where), where + ".a"),
                              number(require(p, "b", where), where + ".b")};
  if (type == "mixture") fail(where, "mixtures cannot be nested");
  fail(where, "unknown population type '" + type + "'");
}

json basic_json(const BasicPopulation& pop) {
  return std::visit(overloaded{
                        [](const SingleSensor& p) -> json {
                          return {{"type", "single"}, {"theta", to_json(p.center)}};
                        },
                        [](const UniformPopulation&) -> json { return {{"type", "uniform"}}; },
                        [](const GaussianPopulation& p) -> json {
                          return {{"type", "gaussian"}, {"c", to_json(p.center)},
                                  {"sigma_pop", to_json(p.spread)}};
                        },
                        [](const IntervalPopulation& p) -> json {
                          return {{"type", "interval"}, {"a", p.lower}, {"b", p.upper}};
                        },
                    },
                    pop);
}

PopulationDensity parse_population(const json& p, const SensorShape& sensor) {
  const std::string where = "population";
  const std::string type = require(p, "type", where).get<std::string>();
  if (type != "mixture")
    return std::visit([](auto&& b) -> PopulationDensity { return b; }, parse_basic(p, where));
  MixturePopulation mix;
  const json& comps = require(p, "components", where);
  if (!comps.is_array()) fail(where, "components must be an array");
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const std::string cw = where + ".components[" + std::to_string(i) + "]";
    const json& c = comps[i];
    MixtureComponent mc;
    mc.weight = number(require(c, "weight", cw), cw + ".weight");
    mc.sensor = parse_sensor(require(c, "sensor", cw), cw + ".sensor", &sensor.observation);
    mc.population = parse_basic(require(c, "population", cw), cw + ".population");
    mix.components.push_back(std::move(mc));
  }
  return mix;
}

json population_json(const PopulationDensity& pop) {
  if (const auto* mix = std::get_if<MixturePopulation>(&pop)) {
    json comps = json::array();
    for (const auto& c : mix->components)
      comps.push_back({{"weight", c.weight},
                       {"sensor", sensor_json(c.sensor)},
                       {"population", basic_json(c.population)}});
    return {{"type", "mixture"}, {"components", std::move(comps)}};
  }
  return std::visit(overloaded{[](const MixturePopulation&) { return json(); },
                               [](const auto& p) { return basic_json(BasicPopulation{p}); }},
                    pop);
}

}  // namespace

static ExperimentConfig parse_config_checked(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  for (const auto& [key, _] : doc.items())
    if (key != "dynamics" && key != "sensor" && key != "population" && key != "sim" &&
        key != "filter")
      fail("", "unknown top-level key '" + key + "'");
  ExperimentConfig cfg;

  const json& d = require(doc, "dynamics", "");
  LinearDynamics dyn;
  dyn.drift = matrix_of(require(d, "A", "dynamics"), "dynamics.A");
  dyn.drive = d.contains("b") ? vector_of(d.at("b"), "dynamics.b")
                              : Vector::Zero(dyn.drift.rows());
  dyn.diffusion = matrix_of(require(d, "D", "dynamics"), "dynamics.D");
  const SensorShape sensor = parse_sensor(require(doc, "sensor", ""), "sensor", nullptr);
  const PopulationDensity pop = parse_population(require(doc, "population", ""), sensor);
  cfg.model = validate(dyn, sensor, pop);
  const int n = dyn.state_dim();

  const json sim = doc.value("sim", json::object());
  cfg.sim.dt = sim.contains("dt") ? number(sim.at("dt"), "sim.dt") : cfg.sim.dt;
  cfg.sim.horizon = sim.contains("T") ? number(sim.at("T"), "sim.T") : cfg.sim.horizon;
  const std::string sim_init = sim.value("init", "prior");
  if (sim_init == "steady_state") cfg.sim.init = SimInit::kSteadyState;
  else if (sim_init == "prior") cfg.sim.init = SimInit::kFilterPrior;
  else if (sim_init == "fixed") {
    cfg.sim.init = SimInit::kFixed;
    cfg.sim.x0 = vector_of(require(sim, "x0", "sim"), "sim.x0");
    if (cfg.sim.x0.size() != n) fail("sim.x0", "length must equal the state dimension");
  } else fail("sim.init", "expected steady_state, prior or fixed");
  if (!(cfg.sim.dt > 0.0) || !(cfg.sim.horizon >= cfg.sim.dt)) fail("sim", "need dt > 0 and T >= dt");

  const json filt = doc.value("filter", json::object());
  cfg.filter.dt = filt.contains("dt") ? number(filt.at("dt"), "filter.dt") : cfg.sim.dt;
  const std::string filt_init = filt.value("init", "given");
  if (filt_init == "steady_state") {
    cfg.filter.init = FilterInit::kSteadyState;
  } else if (filt_init == "given") {
    cfg.filter.init = FilterInit::kGiven;
    cfg.filter.mean0 = vector_of(require(filt, "mu0", "filter"), "filter.mu0");
    cfg.filter.cov0 = matrix_of(require(filt, "sigma0", "filter"), "filter.sigma0");
    if (cfg.filter.mean0.size() != n || cfg.filter.cov0.rows() != n || cfg.filter.cov0.cols() != n)
      fail("filter", "mu0/sigma0 dimensions must match the state dimension");
    if (!is_spd(cfg.filter.cov0)) fail("filter.sigma0", "must be symmetric positive definite");
  } else fail("filter.init", "expected steady_state or given");
  cfg.filter.jitter = filt.value("jitter", false);
  cfg.filter.particles = filt.value("particles", 1000L);
  const std::string resample = filt.value("resample", "every_step");
  if (resample == "every_step") cfg.filter.resample = ResampleMode::kEveryStep;
  else if (resample == "ess") cfg.filter.resample = ResampleMode::kEffectiveSampleSize;
  else fail("filter.resample", "expected every_step or ess");
  cfg.filter.ess_fraction = filt.value("ess_fraction", 0.5);
  if (!(cfg.filter.dt > 0.0)) fail("filter.dt", "must be positive");
  const double ratio = cfg.sim.dt / cfg.filter.dt;
  if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    fail("filter.dt", "must divide sim.dt by an integer factor");
  if (cfg.filter.particles < 2) fail("filter.particles", "need at least two particles");

  if ((cfg.sim.init == SimInit::kSteadyState || cfg.filter.init == FilterInit::kSteadyState) &&
      !is_hurwitz(dyn.drift))
    fail("", "steady_state initialization requires a Hurwitz drift matrix");
  return cfg;
}

ExperimentConfig parse_config(const json& doc) {
  try {
    return parse_config_checked(doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

json to_json(const ExperimentConfig& cfg) {
  const Model& m = cfg.model;
  json sim = {{"dt", cfg.sim.dt}, {"T", cfg.sim.horizon}};
  switch (cfg.sim.init) {
    case SimInit::kSteadyState: sim["init"] = "steady_state"; break;
    case SimInit::kFilterPrior: sim["init"] = "prior"; break;
    case SimInit::kFixed:
      sim["init"] = "fixed";
      sim["x0"] = to_json(cfg.sim.x0);
      break;
  }
  json filt = {{"dt", cfg.filter.dt},
               {"jitter", cfg.filter.jitter},
               {"particles", cfg.filter.particles},
               {"resample", cfg.filter.resample == ResampleMode::kEveryStep ? "every_step" : "ess"},
               {"ess_fraction", cfg.filter.ess_fraction}};
  if (cfg.filter.init == FilterInit::kSteadyState) {
    filt["init"] = "steady_state";
  } else {
    filt["init"] = "given";
    filt["mu0"] = to_json(cfg.filter.mean0);
    filt["sigma0"] = to_json(cfg.filter.cov0);
  }
  return {{"dynamics",
           {{"A", to_json(m.dynamics.drift)},
            {"b", to_json(m.dynamics.drive)},
            {"D", to_json(m.dynamics.diffusion)}}},
          {"sensor", sensor_json(m.sensor)},
          {"population", population_json(m.population)},
          {"sim", std::move(sim)},
          {"filter", std::move(filt)}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

GaussianBelief filter_prior(const ExperimentConfig& cfg) {
  if (cfg.filter.init == FilterInit::kSteadyState) return steady_state_prior(cfg.model.dynamics);
  return {cfg.filter.mean0, cfg.filter.cov0};
}

Vector draw_initial_state(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.sim.init == SimInit::kFixed) return cfg.sim.x0;
  const GaussianBelief law = cfg.sim.init == SimInit::kSteadyState
                                 ? steady_state_prior(cfg.model.dynamics)
                                 : filter_prior(cfg);
  Rng rng(substream(seed, "init"));
  return law.mean + psd_factor(law.cov) * rng.normal_vector(law.dim());
}

}  // namespace ppadf
