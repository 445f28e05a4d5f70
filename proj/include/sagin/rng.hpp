#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace sagin {

// Deterministic 64-bit seed mixer (splitmix64 finalizer). Used to derive
// independent sub-streams from (seed, stream-id) pairs.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Seeded pseudo-random generator with explicit draw algorithms, so a given
// seed reproduces the exact same sequence run after run. The standard
// distribution adaptors are avoided on purpose: their output is
// implementation-defined and would break the reproducibility contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent child stream. Does not consume draws from this stream, so
  // derivation order never affects results.
  Rng derive(std::uint64_t stream) const;

  double uniform();                            // [0, 1)
  double uniform(double lo, double hi);        // [lo, hi)
  std::uint64_t uniform_int(std::uint64_t n);  // {0, ..., n-1}, n >= 1

  // Standard normal via Box-Muller; consumes exactly two uniforms per call.
  double normal();

  // Circularly symmetric complex Gaussian with E|z|^2 = 1.
  std::complex<double> circular_normal();

  // Poisson draw (Knuth multiplication method; fine for the small means
  // used by slot-level traffic models).
  std::uint64_t poisson(double mean);

  std::uint64_t root_seed() const { return root_; }

 private:
  std::uint64_t root_;
  std::mt19937_64 eng_;
};

}  // namespace sagin
