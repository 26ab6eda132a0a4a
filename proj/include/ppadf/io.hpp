#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppadf/adf.hpp"
#include "ppadf/metrics.hpp"
#include "ppadf/pf.hpp"
#include "ppadf/simulate.hpp"

namespace ppadf {

inline constexpr const char* kToolVersion = "0.1.0";

/// 17 significant digits, locale independent.
std::string format_double(double v);

// Trajectory CSV: header `t,x1..xn`, one row per grid point.
std::string trajectory_csv(const Trajectory& traj);
Trajectory parse_trajectory_csv(const std::string& text);

// Belief CSV: `t,mu_1..mu_n,sigma_11..sigma_nn` with the covariance row-major.
std::string belief_csv(const BeliefTrajectory& beliefs);
std::string moments_csv(double dt, const std::vector<Moments>& moments);
BeliefTrajectory parse_belief_csv(const std::string& text);

// Spike JSONL: one `{"t": .., "theta": [..], "comp": ..}` object per line.
std::string spikes_jsonl(const std::vector<SpikeEvent>& spikes);
/// Throws IoError naming the 1-based line on malformed or out-of-order input.
std::vector<SpikeEvent> parse_spikes_jsonl(const std::string& text);

std::string comparison_csv(const std::vector<ComparisonRecord>& records);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

std::string sha256_hex(const std::string& bytes);

/// Provenance record written next to every run's outputs.
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
  nlohmann::json parameters = nlohmann::json::object();
  // (file name, sha256) in write order
  std::vector<std::pair<std::string, std::string>> outputs;

  // Writes `content` into dir/name and records its digest.
  void write_output(const std::filesystem::path& dir, const std::string& name,
                    const std::string& content);

  nlohmann::json to_json() const;
  void save(const std::filesystem::path& dir) const;  // dir/manifest.json
};

}  // namespace ppadf
