#pragma once

// Multi-objective machinery: preference sampling, objective normalization,
// scalarization, the cosine-similarity penalty, constraint gating and the
// min-norm (multiple gradient descent) solvers.

#include <cstddef>
#include <span>
#include <vector>

#include "modnas/rng.hpp"
#include "modnas/tensor.hpp"

namespace modnas {

/// Point on the probability simplex: r_m >= 0, sum r_m = 1 (+-1e-9).
class PreferenceVector {
 public:
  PreferenceVector() = default;
  explicit PreferenceVector(Vec weights);

  std::size_t size() const noexcept { return r_.size(); }
  double operator[](std::size_t m) const { return r_[m]; }
  const Vec& values() const noexcept { return r_; }
  friend bool operator==(const PreferenceVector&, const PreferenceVector&) = default;

 private:
  Vec r_;
};

/// Concentration parameters of the preference Dirichlet (all > 0).
struct DirichletParams {
  Vec beta;
  static DirichletParams uniform(std::size_t m) { return {Vec(m, 1.0)}; }
};

/// r ~ Dir(beta) via normalized Gamma draws.
PreferenceVector sample_preference(const DirichletParams& params, Rng& rng);

/// M = 2: r_i = (i/(n-1), 1 - i/(n-1)). M = 3: smallest simplex lattice with
/// at least n points, then an evenly strided subset of exactly n points.
std::vector<PreferenceVector> equidistant_preferences(std::size_t num_objectives, std::size_t count);

/// Running min/max of detached objective evaluations.
class NormStats {
 public:
  void add(double v);
  void add(std::span<const double> vs);
  void reset();
  bool empty() const noexcept { return count_ == 0; }
  std::size_t count() const noexcept { return count_; }
  double min() const noexcept { return lo_; }
  double max() const noexcept { return hi_; }

 private:
  double lo_ = 0.0;
  double hi_ = 0.0;
  std::size_t count_ = 0;
};

struct Normalized {
  double value = 0.0;
  double slope = 0.0;        // d value / d raw, stats held constant
  bool degenerate = false;   // max == min
};

/// (v - min) / (max - min); stats are constants for differentiation.
/// Degenerate stats return 0 with zero slope. Throws StateError on empty stats.
Normalized normalize_objective(double value, const NormStats& stats);

/// r^T L
double scalarize(const PreferenceVector& r, std::span<const double> losses);

struct CosinePenalty {
  double value = 0.0;   // cos(r, L)
  Vec grad;             // d cos / d L
  bool degenerate = false;
};

/// cos(r, L) = r^T L / (|r| |L|). Zero-norm L gives 0 with zero gradient.
CosinePenalty cosine_penalty(const PreferenceVector& r, std::span<const double> losses);

struct ClosedFormGamma {
  double gamma = 0.5;
  bool degenerate = false;
};

/// argmin_{gamma in [0,1]} |gamma g1 + (1 - gamma) g2|^2 in closed form.
/// |g1 - g2|^2 < 1e-12 returns 0.5 flagged degenerate.
ClosedFormGamma closed_form_gamma(std::span<const double> g1, std::span<const double> g2);

/// argmin_{delta in [0,1]} |delta a + (1 - delta) b|^2 from inner products
/// <a,a>, <a,b>, <b,b>, with the three-branch rule (delta = 1 if <a,b> >= <a,a>;
/// delta = 0 if <a,b> >= <b,b>; otherwise the interior stationary point).
double line_search_delta(double aa, double ab, double bb);
double line_search_delta(std::span<const double> a, std::span<const double> b);

struct FrankWolfeOptions {
  std::size_t max_iters = 100;
  double tol = 1e-6;  // stop once the duality gap max_t (|g|^2 - <g, g_t>) is below tol
  bool away_steps = true;  // also step away from the worst active vertex (linear convergence)
};

struct FrankWolfeResult {
  Vec gamma;
  double objective = 0.0;      // |sum gamma_t g_t|^2
  std::size_t iterations = 0;
  Vec objective_history;       // objective after each iteration, starting with the initial point
};

/// Min-norm point of the convex hull of `gradients` by Frank-Wolfe on the
/// simplex, starting from uniform weights over the Gram matrix.
FrankWolfeResult frank_wolfe_gamma(const std::vector<Vec>& gradients, const FrankWolfeOptions& options = {});
FrankWolfeResult frank_wolfe_gamma_gram(const Matrix& gram, const FrankWolfeOptions& options = {});

/// sum_t gamma_t g_t
Vec mgd_direction(const std::vector<Vec>& gradients, std::span<const double> gamma);

/// Per-objective activity mask after constraint gating. Objective 1 is always
/// active; hardware objective m is gated (inactive) when its predicted
/// normalized value <= c^m. `constraints[m - 2]` holds c^m.
std::vector<bool> gate_constrained_gradient(std::span<const double> predictions,
                                            std::span<const double> constraints);

/// Zeroes the gradients of gated objectives in place; returns the mask.
std::vector<bool> gate_constrained_gradient(std::vector<Vec>& objective_gradients,
                                            std::span<const double> predictions,
                                            std::span<const double> constraints);

}  // namespace modnas
