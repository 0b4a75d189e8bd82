#pragma once

#include <cstdint>

namespace streamalg {

// Deterministic splitmix64 generator. Every sampler in the library draws from
// one of these so that a 64-bit seed reproduces a run exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Uniform in [lo, hi] inclusive.
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  bool coin() { return (next_u64() & 1) != 0; }

  // Geometric length with the given mean: stops with probability 1/(mean+1)
  // each step. Short words exercise identity handling, long ones associativity.
  std::size_t geometric(std::size_t mean = 4) {
    std::size_t n = 0;
    while (below(mean + 1) != 0) ++n;
    return n;
  }

  // Derives an independent stream, e.g. for per-case sub-sampling.
  Rng fork() { return Rng(next_u64() ^ 0x5851f42d4c957f2dull); }

 private:
  std::uint64_t state_;
};

}  // namespace streamalg
