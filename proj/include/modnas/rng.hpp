#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace modnas {

/// Seeded mt19937_64 with helpers. Substreams are derived from a base seed
/// and a path of counters (e.g. step, device, dimension) through
/// std::seed_seq, so independent evaluations stay reproducible regardless of
/// the order in which they run.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);
  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  double uniform();                       // [0, 1)
  double uniform_open();                  // (0, 1)
  double normal(double mean = 0.0, double stddev = 1.0);
  double gamma(double shape);
  std::uint64_t below(std::uint64_t n);   // uniform integer in [0, n)
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace modnas
