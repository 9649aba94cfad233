#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace isd {

// All randomness in a run flows from one master seed through named streams
// (e.g. "folds", "init", "bootstrap"), so any component can be reproduced in
// isolation without replaying the others.

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace detail

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0) {
  std::uint64_t h = detail::splitmix64(master ^ detail::fnv1a64(stream));
  return detail::splitmix64(h ^ index);
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::string_view stream, std::uint64_t index = 0) {
  return std::mt19937_64(derive_seed(master, stream, index));
}

} // namespace isd
