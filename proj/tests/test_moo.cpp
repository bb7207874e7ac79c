#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "modnas/errors.hpp"
#include "modnas/gradcheck.hpp"
#include "modnas/moo.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace modnas;
using modnas::testing::random_vec;
using modnas::testing::uniform_vec;

namespace {

Matrix gram_of(const std::vector<Vec>& g) {
  Matrix m(g.size(), g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) m(i, j) = dot(g[i], g[j]);
  }
  return m;
}

std::vector<Vec> random_gradients(Rng& rng, std::size_t T, std::size_t dim) {
  std::vector<Vec> g(T);
  for (auto& v : g) v = random_vec(rng, dim);
  return g;
}

}  // namespace

TEST_SUITE("moo") {

TEST_CASE("preference vectors live on the simplex") {
  CHECK_NOTHROW(PreferenceVector(Vec{0.3, 0.7}));
  CHECK_THROWS_AS(PreferenceVector(Vec{0.3, 0.6}), ParameterError);
  CHECK_THROWS_AS(PreferenceVector(Vec{-0.1, 1.1}), ParameterError);
  CHECK_THROWS_AS(PreferenceVector(Vec{}), ParameterError);
  Rng rng(1);
  CHECK_THROWS_AS(sample_preference({Vec{1.0, 0.0}}, rng), ParameterError);
}

TEST_CASE("Dirichlet sampling means") {
  Rng rng(2);
  const int n = 100000;
  for (const Vec& beta : {Vec{1.0, 1.0}, Vec{10.0, 1.0}, Vec{2.0, 3.0, 5.0}}) {
    double b0 = 0.0;
    for (double b : beta) b0 += b;
    Vec mean(beta.size(), 0.0);
    for (int i = 0; i < n; ++i) {
      const PreferenceVector r = sample_preference({beta}, rng);
      for (std::size_t m = 0; m < beta.size(); ++m) mean[m] += r[m] / n;
    }
    for (std::size_t m = 0; m < beta.size(); ++m) {
      const double mu = beta[m] / b0;
      const double var = mu * (1.0 - mu) / (b0 + 1.0);
      CHECK(std::abs(mean[m] - mu) < 3.0 * std::sqrt(var / n));
    }
  }
}

TEST_CASE("Dirichlet(1, 1) first weight is uniform (Kolmogorov-Smirnov)") {
  Rng rng(3);
  const std::size_t n = 20000;
  Vec xs(n);
  for (auto& x : xs) x = sample_preference(DirichletParams::uniform(2), rng)[0];
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d = std::max({d, std::abs(xs[i] - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - xs[i])});
  }
  // critical value at the 0.001 level
  CHECK(d < 1.95 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("equidistant preferences") {
  const auto two = equidistant_preferences(2, 24);
  REQUIRE(two.size() == 24);
  CHECK(two.front().values() == Vec{0.0, 1.0});
  CHECK(two.back().values() == Vec{1.0, 0.0});
  const auto three = equidistant_preferences(2, 3);
  CHECK(three[1].values() == Vec{0.5, 0.5});
  for (std::size_t count : {3, 10, 24, 50}) {
    const auto p = equidistant_preferences(3, count);
    REQUIRE(p.size() == count);
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = i + 1; j < p.size(); ++j) CHECK(p[i] != p[j]);
    }
  }
  CHECK_THROWS_AS(equidistant_preferences(4, 10), UnsupportedError);
  CHECK_THROWS_AS(equidistant_preferences(2, 1), ParameterError);
}

TEST_CASE("max-min normalization") {
  NormStats s;
  CHECK_THROWS_AS(normalize_objective(1.0, s), StateError);
  s.add(Vec{2.0, 4.0, 6.0});
  CHECK(normalize_objective(4.0, s).value == doctest::Approx(0.5));
  CHECK(normalize_objective(2.0, s).value == 0.0);
  CHECK(normalize_objective(6.0, s).value == 1.0);
  auto f = [&](std::span<const double> v) { return normalize_objective(v[0], s).value; };
  CHECK(finite_diff_check(f, Vec{3.3}, Vec{normalize_objective(3.3, s).slope}) < 1e-8);
  NormStats flat;
  flat.add(1.0);
  const Normalized n = normalize_objective(1.0, flat);
  CHECK(n.degenerate);
  CHECK(n.value == 0.0);
  CHECK(n.slope == 0.0);
  CHECK_THROWS_AS(s.add(NAN), NumericError);
  s.reset();
  CHECK(s.empty());
}

TEST_CASE("normalization preserves order") {
  Rng rng(4);
  NormStats s;
  const Vec v = random_vec(rng, 50);
  s.add(v);
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    CHECK((v[i] < v[i + 1]) == (normalize_objective(v[i], s).value < normalize_objective(v[i + 1], s).value));
  }
}

TEST_CASE("scalarization is an exact dot product and linear") {
  CHECK(scalarize(PreferenceVector(Vec{1.0, 0.0}), Vec{0.3, 0.9}) == 0.3);
  CHECK(scalarize(PreferenceVector(Vec{0.5, 0.5}), Vec{0.2, 0.8}) == doctest::Approx(0.5));
  CHECK(scalarize(PreferenceVector(Vec{0.25, 0.75}), Vec{4.0, 8.0}) == 7.0);
  CHECK_THROWS_AS(scalarize(PreferenceVector(Vec{0.5, 0.5}), Vec{1.0}), ShapeError);
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const PreferenceVector r = sample_preference(DirichletParams::uniform(3), rng);
    const Vec l1 = random_vec(rng, 3), l2 = random_vec(rng, 3);
    const double a = rng.normal(), b = rng.normal();
    Vec mix(3);
    for (std::size_t m = 0; m < 3; ++m) mix[m] = a * l1[m] + b * l2[m];
    CHECK(scalarize(r, mix) == doctest::Approx(a * scalarize(r, l1) + b * scalarize(r, l2)).epsilon(1e-12));
  }
}

TEST_CASE("cosine penalty values and gradient") {
  const PreferenceVector r(Vec{0.25, 0.75});
  CHECK(cosine_penalty(r, Vec{0.5, 1.5}).value == doctest::Approx(1.0));
  CHECK(cosine_penalty(r, Vec{-3.0, 1.0}).value == doctest::Approx(0.0));
  CHECK(cosine_penalty(PreferenceVector(Vec{1.0, 0.0}), Vec{1.0, 1.0}).value == doctest::Approx(1.0 / std::sqrt(2.0)));
  const CosinePenalty z = cosine_penalty(r, Vec{0.0, 0.0});
  CHECK(z.degenerate);
  CHECK(z.value == 0.0);
  Rng rng(6);
  double worst = 0.0;
  for (int i = 0; i < 120; ++i) {
    const PreferenceVector p = sample_preference(DirichletParams::uniform(2 + rng.below(2)), rng);
    const Vec l = uniform_vec(rng, p.size(), 0.05, 1.0);
    auto f = [&](std::span<const double> v) { return cosine_penalty(p, v).value; };
    worst = std::max(worst, finite_diff_check(f, l, cosine_penalty(p, l).grad));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("closed-form gamma on hand cases") {
  CHECK(closed_form_gamma(Vec{1, 0}, Vec{0, 2}).gamma == doctest::Approx(0.8));
  CHECK(closed_form_gamma(Vec{1, 0}, Vec{3, 0}).gamma == 1.0);
  const ClosedFormGamma same = closed_form_gamma(Vec{1, 1}, Vec{1, 1});
  CHECK(same.degenerate);
  CHECK(same.gamma == 0.5);
}

TEST_CASE("line search branches") {
  CHECK(line_search_delta(Vec{1, 0}, Vec{0, 2}) == doctest::Approx(0.8));
  CHECK(line_search_delta(Vec{1, 1}, Vec{1, 1}) == 1.0);
  CHECK(line_search_delta(Vec{0, 0}, Vec{1, 3}) == 1.0);
  CHECK(line_search_delta(Vec{3, 0}, Vec{1, 0}) == 0.0);
}

TEST_CASE("closed form and line search agree on random pairs") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Vec g1 = random_vec(rng, 5), g2 = random_vec(rng, 5);
    CHECK(closed_form_gamma(g1, g2).gamma == doctest::Approx(line_search_delta(g1, g2)).epsilon(1e-9));
  }
}

TEST_CASE("Frank-Wolfe hand cases") {
  const auto two = frank_wolfe_gamma({Vec{1, 0}, Vec{0, 2}});
  CHECK(two.gamma[0] == doctest::Approx(0.8).epsilon(1e-6));
  const auto three = frank_wolfe_gamma({Vec{1, 0}, Vec{0, 1}, Vec{1, 1}});
  CHECK(three.gamma[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(three.gamma[1] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(three.gamma[2] == doctest::Approx(0.0));
  CHECK(three.objective == doctest::Approx(0.5));
  const auto same = frank_wolfe_gamma({Vec{1, 2}, Vec{1, 2}, Vec{1, 2}});
  CHECK(mgd_direction({Vec{1, 2}, Vec{1, 2}, Vec{1, 2}}, same.gamma) == Vec{1, 2});
  CHECK(frank_wolfe_gamma({Vec{3, 4}}).gamma == Vec{1.0});
  CHECK_THROWS_AS(frank_wolfe_gamma({Vec{1, NAN}, Vec{0, 1}}), NumericError);
  CHECK_THROWS_AS(frank_wolfe_gamma({}), ShapeError);
}

TEST_CASE("Frank-Wolfe matches the closed form for two gradients") {
  Rng rng(8);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t dim = 1 + rng.below(20);
    const Vec g1 = random_vec(rng, dim), g2 = random_vec(rng, dim);
    const ClosedFormGamma cf = closed_form_gamma(g1, g2);
    if (cf.degenerate) continue;
    worst = std::max(worst, std::abs(frank_wolfe_gamma({g1, g2}).gamma[0] - cf.gamma));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("Frank-Wolfe against exact and grid oracles") {
  Rng rng(9);
  for (std::size_t T = 3; T <= 6; ++T) {
    for (int i = 0; i < 10; ++i) {
      const auto g = random_gradients(rng, T, 1 + rng.below(20));
      const FrankWolfeResult r = frank_wolfe_gamma(g);
      const Matrix G = gram_of(g);
      CHECK(r.objective == doctest::Approx(oracle::exact_min_norm(G).value).epsilon(1e-6).scale(1.0));
      const auto [lo, hi] = oracle::grid_min_bracket(G, 200);
      if (T <= 4) {
        const double grid = oracle::grid_min_norm(G, 200);
        CHECK(grid >= lo - 1e-12);
        CHECK(grid <= hi + 1e-12);
      }
      CHECK(std::abs(r.objective - lo) < 1e-3);
      CHECK(std::abs(r.objective - hi) < 1e-3);
      double sum = 0.0;
      for (double v : r.gamma) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      // the reported objective is the squared norm of the combination
      CHECK(squared_norm(mgd_direction(g, r.gamma)) == doctest::Approx(r.objective).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("Frank-Wolfe invariants") {
  Rng rng(10);
  for (int i = 0; i < 200; ++i) {
    const std::size_t T = 2 + rng.below(5);
    const auto g = random_gradients(rng, T, 2 + rng.below(10));
    for (bool away : {true, false}) {
      FrankWolfeOptions opt;
      opt.away_steps = away;
      const FrankWolfeResult r = frank_wolfe_gamma(g, opt);
      for (std::size_t k = 1; k < r.objective_history.size(); ++k) {
        CHECK(r.objective_history[k] <= r.objective_history[k - 1] + 1e-12);
      }
      double vmin = INFINITY;
      for (const auto& v : g) vmin = std::min(vmin, squared_norm(v));
      CHECK(r.objective <= vmin + 1e-9);
    }
    // min-norm optimality: <g*, g_t> >= |g*|^2 for every t, given enough iterations
    FrankWolfeOptions long_run;
    long_run.max_iters = 100000;
    const FrankWolfeResult r = frank_wolfe_gamma(g, long_run);
    const Vec d = mgd_direction(g, r.gamma);
    for (const auto& v : g) CHECK(dot(d, v) >= squared_norm(d) - 1e-6);
  }
}

TEST_CASE("opposed gradients are Pareto-stationary") {
  const auto r = frank_wolfe_gamma({Vec{1, -2}, Vec{-1, 2}});
  CHECK(r.gamma[0] == doctest::Approx(0.5));
  const Vec d = mgd_direction({Vec{1, -2}, Vec{-1, 2}}, r.gamma);
  CHECK(norm(d) < 1e-12);
  CHECK(mgd_direction({Vec{1, 2}, Vec{3, 4}}, Vec{0.0, 1.0}) == Vec{3, 4});
  CHECK_THROWS_AS(mgd_direction({Vec{1, 2}}, Vec{0.5, 0.5}), ShapeError);
}

TEST_CASE("constraint gating") {
  // c = 0: every objective stays active, c = 1: only the error objective remains
  CHECK(gate_constrained_gradient(Vec{0.4, 0.3, 0.2}, Vec{0.0, 0.0}) == std::vector<bool>{true, true, true});
  CHECK(gate_constrained_gradient(Vec{0.4, 0.3, 0.2}, Vec{1.0, 1.0}) == std::vector<bool>{true, false, false});
  // a prediction exactly at the threshold is gated
  CHECK(gate_constrained_gradient(Vec{0.4, 0.5}, Vec{0.5}) == std::vector<bool>{true, false});
  std::vector<Vec> grads{Vec{1, 1}, Vec{2, 2}, Vec{3, 3}};
  const auto mask = gate_constrained_gradient(grads, Vec{0.9, 0.1, 0.8}, Vec{0.5, 0.5});
  CHECK(mask == std::vector<bool>{true, false, true});
  CHECK(grads[1] == Vec{0, 0});
  CHECK(grads[2] == Vec{3, 3});
  CHECK_THROWS_AS(gate_constrained_gradient(Vec{0.4, 0.5}, Vec{0.5, 0.5}), ShapeError);
}

}  // TEST_SUITE
