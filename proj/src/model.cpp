#include "ppadf/model.hpp"

#include <cmath>
#include <sstream>

#include "ppadf/errors.hpp"

namespace ppadf {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::ostringstream os;
  for (std::size_t i = 0; i < items.size(); ++i) os << (i ? "; " : "") << items[i];
  return os.str();
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_sensor(const SensorShape& s, int n, const std::string& where,
                  std::vector<std::string>& out) {
  const int m = s.sensory_dim();
  if (!(s.peak_rate >= 0.0) || !std::isfinite(s.peak_rate))
    out.push_back(where + "peak rate must be finite and non-negative");
  if (m == 0) {
    out.push_back(where + "observation matrix is empty");
    return;
  }
  if (s.state_dim() != n) {
    std::ostringstream os;
    os << where << "dimension mismatch: observation matrix has " << s.state_dim()
       << " columns, state dimension is " << n;
    out.push_back(os.str());
  }
  if (m > s.state_dim()) out.push_back(where + "sensory dimension exceeds state dimension");
  else if (matrix_rank(s.observation) < m)
    out.push_back(where + "observation matrix must have full row rank");
  if (s.precision.rows() != m || s.precision.cols() != m) {
    out.push_back(where + "dimension mismatch: precision must be m x m");
  } else if (!is_psd(s.precision)) {
    out.push_back(where + "precision must be symmetric positive semidefinite");
  }
}

void check_basic(const BasicPopulation& pop, const SensorShape& s, const std::string& where,
                 std::vector<std::string>& out) {
  const int m = s.sensory_dim();
  std::visit(overloaded{
                 [&](const SingleSensor& p) {
                   if (p.center.size() != m)
                     out.push_back(where + "dimension mismatch: sensor center must have length m");
                 },
                 [&](const UniformPopulation&) {
                   if (s.precision.rows() == m && s.precision.cols() == m && m > 0 &&
                       !is_spd(s.precision))
                     out.push_back(where + "uniform population requires positive definite precision");
                 },
                 [&](const GaussianPopulation& p) {
                   if (p.center.size() != m)
                     out.push_back(where + "dimension mismatch: population center must have length m");
                   if (p.spread.rows() != m || p.spread.cols() != m)
                     out.push_back(where + "dimension mismatch: population covariance must be m x m");
                   else if (!is_spd(p.spread))
                     out.push_back(where + "population covariance must be symmetric positive definite");
                 },
                 [&](const IntervalPopulation& p) {
                   if (m != 1) out.push_back(where + "interval requires scalar sensory space");
                   if (!(p.lower < p.upper)) out.push_back(where + "interval requires lower < upper");
                   if (m == 1 && s.precision.size() == 1 && !(s.precision(0, 0) > 0.0))
                     out.push_back(where + "interval population requires positive precision");
                 },
             },
             pop);
}

}  // namespace

ModelError::ModelError(std::vector<std::string> violations)
    : ConfigError("invalid model: " + join(violations)), violations_(std::move(violations)) {}

std::vector<MixtureComponent> flatten_components(const SensorShape& sensor,
                                                 const PopulationDensity& population) {
  return std::visit(overloaded{
                        [&](const MixturePopulation& p) { return p.components; },
                        [&](const auto& p) {
                          return std::vector<MixtureComponent>{{1.0, sensor, BasicPopulation{p}}};
                        },
                    },
                    population);
}

std::string population_name(const PopulationDensity& population) {
  static const char* names[] = {"single", "uniform", "gaussian", "interval", "mixture"};
  return names[population.index()];
}

std::vector<std::string> model_violations(const LinearDynamics& dyn, const SensorShape& sensor,
                                          const PopulationDensity& population) {
  std::vector<std::string> out;
  const int n = dyn.state_dim();
  if (n == 0) out.push_back("dynamics: drift matrix is empty");
  if (dyn.drift.rows() != dyn.drift.cols()) out.push_back("dynamics: drift matrix must be square");
  if (dyn.drive.size() != n) out.push_back("dynamics: dimension mismatch: drive must have length n");
  if (dyn.diffusion.rows() != n)
    out.push_back("dynamics: dimension mismatch: diffusion must have n rows");
  if (!dyn.drift.allFinite() || !dyn.drive.allFinite() || !dyn.diffusion.allFinite())
    out.push_back("dynamics: entries must be finite");

  check_sensor(sensor, n, "sensor: ", out);

  std::visit(overloaded{
                 [&](const MixturePopulation& mix) {
                   if (mix.components.empty()) out.push_back("mixture: no components");
                   for (std::size_t i = 0; i < mix.components.size(); ++i) {
                     const auto& c = mix.components[i];
                     const std::string where = "mixture component " + std::to_string(i) + ": ";
                     if (!(c.weight > 0.0) || !std::isfinite(c.weight))
                       out.push_back(where + "weight must be positive");
                     check_sensor(c.sensor, n, where, out);
                     if (c.sensor.observation.rows() != sensor.observation.rows() ||
                         c.sensor.observation.cols() != sensor.observation.cols() ||
                         c.sensor.observation != sensor.observation)
                       out.push_back(where + "mixture components must share the observation matrix");
                     check_basic(c.population, c.sensor, where, out);
                   }
                 },
                 [&](const auto& basic) {
                   check_basic(BasicPopulation{basic}, sensor, "population: ", out);
                 },
             },
             population);
  return out;
}

Model validate(const LinearDynamics& dynamics, const SensorShape& sensor,
               const PopulationDensity& population) {
  auto violations = model_violations(dynamics, sensor, population);
  if (!violations.empty()) throw ModelError(std::move(violations));
  return Model{dynamics, sensor, population};
}

bool is_hurwitz(const Matrix& drift) {
  if (drift.rows() == 0 || drift.rows() != drift.cols()) return false;
  Eigen::EigenSolver<Matrix> es(drift, false);
  return es.eigenvalues().real().maxCoeff() < 0.0;
}

GaussianBelief steady_state_prior(const LinearDynamics& dyn) {
  if (!is_hurwitz(dyn.drift))
    throw ModelError({"dynamics: steady state requires a Hurwitz drift matrix"});
  const int n = dyn.state_dim();
  const Matrix noise = dyn.diffusion * dyn.diffusion.transpose();
  const Matrix eye = Matrix::Identity(n, n);
  // vec(A S + S A^T) = (I kron A + A kron I) vec(S), column-major vec.
  Matrix op = Matrix::Zero(n * n, n * n);
  for (int j = 0; j < n; ++j) op.block(j * n, j * n, n, n) += dyn.drift;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) op.block(i * n, j * n, n, n) += dyn.drift(i, j) * eye;
  Vector rhs = -Eigen::Map<const Vector>(noise.data(), n * n);
  Vector sol = op.fullPivLu().solve(rhs);
  Matrix cov = symmetrized(Eigen::Map<Matrix>(sol.data(), n, n));
  Vector mean = -dyn.drift.fullPivLu().solve(dyn.drive);
  return GaussianBelief{mean, cov};
}

}  // namespace ppadf
