#pragma once

#include <cstdint>
#include <random>

namespace flowopt {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent child seeds from a
/// campaign seed so that every random stream can be replayed on its own.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix_seed(mix_seed(seed) ^ (stream * 0xd1b54a32d192ed03ULL));
}

}  // namespace flowopt
