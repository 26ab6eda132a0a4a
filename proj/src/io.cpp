#include "ppadf/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ppadf/errors.hpp"

namespace ppadf {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& field, std::size_t line) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && *begin == ' ') ++begin;
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw IoError("line " + std::to_string(line) + ": bad number '" + field + "'");
  return v;
}

// Data rows of a CSV with a header; returns rows of numbers.
std::vector<std::vector<double>> parse_rows(const std::string& text, std::size_t& columns) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty CSV");
  columns = split(line, ',').size();
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != columns)
      throw IoError("line " + std::to_string(lineno) + ": expected " + std::to_string(columns) +
                    " columns");
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(parse_number(f, lineno));
    rows.push_back(std::move(row));
  }
  return rows;
}

double grid_step(const std::vector<std::vector<double>>& rows) {
  return rows.size() >= 2 ? rows[1][0] - rows[0][0] : 0.0;
}

}  // namespace

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t";
  const Eigen::Index n = traj.states.empty() ? 0 : traj.states[0].size();
  for (Eigen::Index i = 0; i < n; ++i) out += ",x" + std::to_string(i + 1);
  out += '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out += format_double(traj.time(k));
    for (Eigen::Index i = 0; i < n; ++i) out += "," + format_double(traj.states[k](i));
    out += '\n';
  }
  return out;
}

Trajectory parse_trajectory_csv(const std::string& text) {
  std::size_t cols = 0;
  const auto rows = parse_rows(text, cols);
  Trajectory traj;
  traj.dt = grid_step(rows);
  for (const auto& r : rows) {
    Vector x(static_cast<Eigen::Index>(cols - 1));
    for (std::size_t i = 1; i < cols; ++i) x(static_cast<Eigen::Index>(i - 1)) = r[i];
    traj.states.push_back(std::move(x));
  }
  return traj;
}

namespace {

std::string belief_header(Eigen::Index n) {
  std::string out = "t";
  for (Eigen::Index i = 0; i < n; ++i) out += ",mu_" + std::to_string(i + 1);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out += ",sigma_" + std::to_string(i + 1) + std::to_string(j + 1);
  return out + '\n';
}

void append_belief_row(std::string& out, double t, const Vector& mean, const Matrix& cov) {
  out += format_double(t);
  for (Eigen::Index i = 0; i < mean.size(); ++i) out += "," + format_double(mean(i));
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    for (Eigen::Index j = 0; j < cov.cols(); ++j) out += "," + format_double(cov(i, j));
  out += '\n';
}

}  // namespace

std::string belief_csv(const BeliefTrajectory& beliefs) {
  const Eigen::Index n = beliefs.beliefs.empty() ? 0 : beliefs.beliefs[0].dim();
  std::string out = belief_header(n);
  for (std::size_t k = 0; k < beliefs.size(); ++k)
    append_belief_row(out, beliefs.time(k), beliefs.beliefs[k].mean, beliefs.beliefs[k].cov);
  return out;
}

std::string moments_csv(double dt, const std::vector<Moments>& moments) {
  const Eigen::Index n = moments.empty() ? 0 : moments[0].mean.size();
  std::string out = belief_header(n);
  for (std::size_t k = 0; k < moments.size(); ++k)
    append_belief_row(out, static_cast<double>(k) * dt, moments[k].mean, moments[k].cov);
  return out;
}

BeliefTrajectory parse_belief_csv(const std::string& text) {
  std::size_t cols = 0;
  const auto rows = parse_rows(text, cols);
  // cols = 1 + n + n^2
  Eigen::Index n = 0;
  while (static_cast<std::size_t>(1 + n + n * n) < cols) ++n;
  if (static_cast<std::size_t>(1 + n + n * n) != cols) throw IoError("belief CSV has a bad column count");
  BeliefTrajectory out;
  out.dt = grid_step(rows);
  for (const auto& r : rows) {
    GaussianBelief b{Vector(n), Matrix(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) b.mean(i) = r[static_cast<std::size_t>(1 + i)];
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) b.cov(i, j) = r[static_cast<std::size_t>(1 + n + i * n + j)];
    out.beliefs.push_back(std::move(b));
  }
  return out;
}

std::string spikes_jsonl(const std::vector<SpikeEvent>& spikes) {
  std::string out;
  for (const auto& s : spikes) {
    out += "{\"t\": " + format_double(s.t) + ", \"theta\": [";
    for (Eigen::Index i = 0; i < s.mark.size(); ++i) out += (i ? ", " : "") + format_double(s.mark(i));
    out += "], \"comp\": " + std::to_string(s.component) + "}\n";
  }
  return out;
}

std::vector<SpikeEvent> parse_spikes_jsonl(const std::string& text) {
  std::vector<SpikeEvent> out;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "spikes line " + std::to_string(lineno);
    SpikeEvent ev;
    try {
      const json obj = json::parse(line);
      ev.t = obj.at("t").get<double>();
      const json& theta = obj.at("theta");
      if (theta.is_number()) {
        ev.mark = Vector::Constant(1, theta.get<double>());
      } else {
        ev.mark.resize(static_cast<Eigen::Index>(theta.size()));
        for (std::size_t i = 0; i < theta.size(); ++i)
          ev.mark(static_cast<Eigen::Index>(i)) = theta[i].get<double>();
      }
      ev.component = obj.value("comp", 0);
    } catch (const json::exception& e) {
      throw IoError(where + ": " + e.what());
    }
    if (!out.empty() && ev.t < out.back().t)
      throw IoError(where + ": timestamp " + format_double(ev.t) + " is earlier than the previous event");
    out.push_back(std::move(ev));
  }
  return out;
}

std::string comparison_csv(const std::vector<ComparisonRecord>& records) {
  std::string out = "t,eps_mu,eps_sigma,ks\n";
  for (const auto& r : records)
    out += format_double(r.t) + "," + format_double(r.eps_mu) + "," + format_double(r.eps_sigma) +
           "," + format_double(r.ks) + "\n";
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

void RunManifest::write_output(const std::filesystem::path& dir, const std::string& name,
                               const std::string& content) {
  write_file(dir / name, content);
  outputs.emplace_back(name, sha256_hex(content));
}

json RunManifest::to_json() const {
  json files = json::array();
  for (const auto& [name, digest] : outputs) files.push_back({{"file", name}, {"sha256", digest}});
  return {{"command", command},
          {"tool_version", kToolVersion},
          {"seed", seed},
          {"config", config},
          {"parameters", parameters},
          {"warnings", warnings},
          {"outputs", std::move(files)}};
}

void RunManifest::save(const std::filesystem::path& dir) const {
  write_file(dir / "manifest.json", to_json().dump(2) + "\n");
}

}  // namespace ppadf
