#include "ppadf/rng.hpp"

namespace ppadf {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t name_key(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t stable_hash(std::initializer_list<std::uint64_t> keys) {
  auto it = keys.begin();
  if (it == keys.end()) return splitmix64(0);
  std::uint64_t h = *it++;
  for (; it != keys.end(); ++it) h = splitmix64(h ^ splitmix64(*it + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace ppadf
