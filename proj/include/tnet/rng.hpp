#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>

namespace tnet {

// Deterministic random generator: xoshiro256++ seeded through splitmix64.
// The algorithm is fixed by this implementation, not by the platform, so a
// seed produces the same stream on every machine. Gaussian draws use the
// Box-Muller transform with a cached spare.
//
// An Rng is single-owner. Parallel consumers must each take their own child
// stream via split(), which derives a new generator from the original seed
// and a stream id only (it does not consume or depend on draws made so far).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double next_double();

  // Standard normal draw.
  double next_gaussian();

  // Uniform integer in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);

  bool bernoulli(double p);

  // Child generator for stream `stream`, derived from this generator's seed.
  // split(s) is a pure function of (seed, s): calling it before or after
  // consuming draws yields the same child.
  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// n standard-normal draws as a vector. n = 0 yields an empty vector.
Eigen::VectorXd gaussian_vector(Rng& rng, Eigen::Index n);

}  // namespace tnet
