#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include "ppadf/linalg.hpp"

namespace ppadf {

std::uint64_t splitmix64(std::uint64_t x);

// FNV-1a of a stream name, used to key named sub-streams.
std::uint64_t name_key(std::string_view name);

/// Order-sensitive hash of a key sequence. stable_hash({a, b, c}) equals
/// stable_hash({stable_hash({a, b}), c}), so derived seeds compose.
std::uint64_t stable_hash(std::initializer_list<std::uint64_t> keys);

inline std::uint64_t substream(std::uint64_t seed, std::string_view name) {
  return stable_hash({seed, name_key(name)});
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return normal_(engine_); }
  Vector normal_vector(Eigen::Index size) {
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i) v(i) = normal();
    return v;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace ppadf
