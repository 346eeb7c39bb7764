#pragma once

// Deterministic randomness plumbing.  Every randomized routine receives an
// explicit generator or a seed from which it derives private streams; the
// library never touches global RNG state.

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace kermat {

using Rng = std::mt19937_64;

namespace detail {

// splitmix64 finalizer; decorrelates seeds that differ in few bits
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace detail

inline Rng seeded_rng(std::uint64_t seed) { return Rng(detail::mix64(seed)); }

// seed for an independent child stream; (seed, stream) pairs never collide in practice
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return detail::mix64(detail::mix64(seed) ^ (0xd1342543de82ef95ull * (stream + 1)));
}

inline Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

// k distinct values from [0, m), sorted ascending.  Floyd's algorithm, so cost
// is O(k) expected regardless of m.
inline std::vector<std::uint32_t> sample_without_replacement(std::size_t m, std::size_t k, Rng& rng) {
  if (k > m) throw std::invalid_argument("sample_without_replacement: k > m");
  std::vector<std::uint32_t> out;
  out.reserve(k);
  std::unordered_set<std::uint32_t> seen;
  seen.reserve(k * 2);
  for (std::size_t j = m - k; j < m; ++j) {
    std::uint32_t t = static_cast<std::uint32_t>(
        std::uniform_int_distribution<std::uint64_t>(0, j)(rng));
    if (!seen.insert(t).second) {
      seen.insert(static_cast<std::uint32_t>(j));
      out.push_back(static_cast<std::uint32_t>(j));
    } else {
      out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace kermat
