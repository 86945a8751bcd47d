#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace chainscat {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser; bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive the seed of an independent stream from a master seed and a path of
/// integer labels (experiment tag, channel count, chunk index, ...). The
/// result depends only on the arguments, never on thread scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t label : path) h = splitmix64(h ^ splitmix64(label + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::seed_seq seq{static_cast<std::uint32_t>(derive_seed(master, path)),
                    static_cast<std::uint32_t>(derive_seed(master, path) >> 32)};
  return Rng(seq);
}

}  // namespace chainscat
