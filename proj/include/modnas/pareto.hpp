#pragma once

#include <cstdint>
#include <vector>

#include "modnas/rng.hpp"
#include "modnas/tensor.hpp"

namespace modnas {

/// An M-dimensional objective vector (minimization), optionally tagged with
/// the flat index of the architecture that produced it (-1 if unknown).
struct FrontPoint {
  Vec values;
  std::int64_t arch = -1;
};

/// Nondominated point set in canonical (lexicographic) order.
struct ParetoFront {
  std::size_t num_objectives = 0;
  std::vector<FrontPoint> points;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  std::vector<Vec> values() const;
};

/// a is no worse than b everywhere and strictly better somewhere.
bool dominates(const Vec& a, const Vec& b);

/// Maximal set under dominance; identical points are kept once (lowest arch id).
ParetoFront nondominated_filter(std::vector<FrontPoint> points);
ParetoFront nondominated_filter(const std::vector<Vec>& points);

/// Exact hypervolume for M in {1, 2, 3}. Coordinates beyond the reference
/// point are clipped to it (with a warning). Throws UnsupportedError for M >= 4.
double hypervolume(const std::vector<Vec>& points, const Vec& reference);
double hypervolume(const ParetoFront& front, const Vec& reference);

struct MonteCarloEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

/// Fraction of uniform samples in [0, reference] dominated (weakly) by some
/// point, times the box volume. Reports the binomial standard error.
MonteCarloEstimate hypervolume_mc(const std::vector<Vec>& points, const Vec& reference, std::size_t samples,
                                  Rng& rng);

/// Generational distance, (1/|P|) * sqrt(sum_p min_s d(p, s)^2).
double gd(const std::vector<Vec>& front, const std::vector<Vec>& reference_set);
double igd(const std::vector<Vec>& front, const std::vector<Vec>& reference_set);
/// GD with d+(p, s) = sqrt(sum_k max(p_k - s_k, 0)^2).
double gd_plus(const std::vector<Vec>& front, const std::vector<Vec>& reference_set);
double igd_plus(const std::vector<Vec>& front, const std::vector<Vec>& reference_set);

}  // namespace modnas
