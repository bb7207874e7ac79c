#include "modnas/moo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "modnas/errors.hpp"

namespace modnas {

PreferenceVector::PreferenceVector(Vec weights) : r_(std::move(weights)) {
  if (r_.empty()) throw ParameterError("empty preference vector");
  double total = 0.0;
  for (double v : r_) {
    if (!(v >= 0.0)) throw ParameterError("preference weights must be non-negative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ParameterError("preference weights must sum to 1");
}

PreferenceVector sample_preference(const DirichletParams& params, Rng& rng) {
  if (params.beta.empty()) throw ParameterError("Dirichlet needs at least one concentration");
  Vec g(params.beta.size());
  double total = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) {
    if (!(params.beta[m] > 0.0)) throw ParameterError("Dirichlet concentrations must be positive");
    g[m] = rng.gamma(params.beta[m]);
    total += g[m];
  }
  if (!(total > 0.0)) {
    // every draw underflowed; fall back to a uniformly chosen vertex
    std::fill(g.begin(), g.end(), 0.0);
    g[rng.below(g.size())] = 1.0;
    total = 1.0;
  }
  for (double& v : g) v /= total;
  // exact renormalization against rounding
  const double s = std::accumulate(g.begin(), g.end(), 0.0);
  g.back() = std::max(0.0, g.back() + (1.0 - s));
  return PreferenceVector(std::move(g));
}

std::vector<PreferenceVector> equidistant_preferences(std::size_t num_objectives, std::size_t count) {
  if (count < 2) throw ParameterError("need at least 2 preference vectors");
  std::vector<PreferenceVector> out;
  if (num_objectives == 2) {
    for (std::size_t i = 0; i < count; ++i) {
      const double a = static_cast<double>(i) / static_cast<double>(count - 1);
      out.emplace_back(Vec{a, 1.0 - a});
    }
    return out;
  }
  if (num_objectives != 3) {
    throw UnsupportedError("equidistant preferences support 2 or 3 objectives, got " +
                           std::to_string(num_objectives));
  }
  std::size_t h = 1;
  while ((h + 2) * (h + 1) / 2 < count) ++h;
  std::vector<Vec> lattice;
  for (std::size_t i = 0; i <= h; ++i) {
    for (std::size_t j = 0; j + i <= h; ++j) {
      const double a = static_cast<double>(i) / static_cast<double>(h);
      const double b = static_cast<double>(j) / static_cast<double>(h);
      lattice.push_back({a, b, std::max(0.0, 1.0 - a - b)});
    }
  }
  const std::size_t n = lattice.size();
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t idx = (k * (n - 1) + (count - 1) / 2) / (count - 1);
    Vec p = lattice[idx];
    p[2] = 1.0 - p[0] - p[1];
    if (p[2] < 0.0) p[2] = 0.0;
    out.emplace_back(std::move(p));
  }
  return out;
}

void NormStats::add(double v) {
  if (!std::isfinite(v)) throw NumericError("non-finite value added to normalization statistics");
  if (count_ == 0) {
    lo_ = hi_ = v;
  } else {
    lo_ = std::min(lo_, v);
    hi_ = std::max(hi_, v);
  }
  ++count_;
}

void NormStats::add(std::span<const double> vs) {
  for (double v : vs) add(v);
}

void NormStats::reset() {
  lo_ = hi_ = 0.0;
  count_ = 0;
}

Normalized normalize_objective(double value, const NormStats& stats) {
  if (stats.empty()) throw StateError("normalization statistics are empty");
  const double range = stats.max() - stats.min();
  if (!(range > 0.0)) return {0.0, 0.0, true};
  return {(value - stats.min()) / range, 1.0 / range, false};
}

double scalarize(const PreferenceVector& r, std::span<const double> losses) {
  check_size(losses.size(), r.size(), "scalarize losses");
  return dot(r.values(), losses);
}

CosinePenalty cosine_penalty(const PreferenceVector& r, std::span<const double> losses) {
  check_size(losses.size(), r.size(), "cosine penalty losses");
  CosinePenalty out{0.0, Vec(losses.size(), 0.0), false};
  const double rn = norm(r.values());
  const double ln = norm(losses);
  if (!(ln > 0.0) || !(rn > 0.0)) {
    out.degenerate = true;
    return out;
  }
  const double rl = dot(r.values(), losses);
  out.value = rl / (rn * ln);
  for (std::size_t m = 0; m < losses.size(); ++m) {
    out.grad[m] = r[m] / (rn * ln) - rl * losses[m] / (rn * ln * ln * ln);
  }
  return out;
}

ClosedFormGamma closed_form_gamma(std::span<const double> g1, std::span<const double> g2) {
  check_size(g2.size(), g1.size(), "closed-form gamma");
  const Vec diff = sub(g1, g2);
  const double denom = squared_norm(diff);
  if (denom < 1e-12) return {0.5, true};
  const double num = -dot(diff, g2);  // (g2 - g1)^T g2
  return {std::clamp(num / denom, 0.0, 1.0), false};
}

double line_search_delta(double aa, double ab, double bb) {
  if (ab >= aa) return 1.0;
  if (ab >= bb) return 0.0;
  return (bb - ab) / (aa + bb - 2.0 * ab);
}

double line_search_delta(std::span<const double> a, std::span<const double> b) {
  return line_search_delta(dot(a, a), dot(a, b), dot(b, b));
}

FrankWolfeResult frank_wolfe_gamma_gram(const Matrix& gram, const FrankWolfeOptions& options) {
  const std::size_t T = gram.rows();
  if (T == 0 || gram.cols() != T) throw ShapeError("Gram matrix must be square and non-empty");
  if (!all_finite(gram.data())) throw NumericError("non-finite gradients passed to the Frank-Wolfe solver");
  FrankWolfeResult res;
  res.gamma.assign(T, 1.0 / static_cast<double>(T));
  auto quad = [&](const Vec& g, const Vec& mg) { return dot(g, mg); };
  Vec mg = matvec(gram, res.gamma);
  res.objective = quad(res.gamma, mg);
  res.objective_history.push_back(res.objective);
  if (T == 1) {
    res.gamma = {1.0};
    res.objective = gram(0, 0);
    return res;
  }
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    const std::size_t t = static_cast<std::size_t>(std::min_element(mg.begin(), mg.end()) - mg.begin());
    const double aa = res.objective;
    // duality gap: max_t |g*|^2 - <g*, g_t>
    if (aa - mg[t] <= options.tol) break;
    std::size_t v = t;
    if (options.away_steps) {
      for (std::size_t i = 0; i < T; ++i) {
        if (res.gamma[i] > 0.0 && (v == t || mg[i] > mg[v])) v = i;
      }
    }
    double change = 0.0;
    if (v != t && mg[v] - aa > aa - mg[t] && res.gamma[v] < 1.0) {
      // away step: gamma <- (1 + lambda) gamma - lambda e_v, lambda <= gamma_v / (1 - gamma_v)
      const double ab = mg[v];
      const double bb = gram(v, v);
      const double curv = aa - 2.0 * ab + bb;
      const double cap = res.gamma[v] / (1.0 - res.gamma[v]);
      const double lambda = curv > 0.0 ? std::min(cap, (ab - aa) / curv) : cap;
      for (std::size_t i = 0; i < T; ++i) {
        const double next = i == v && lambda == cap ? 0.0 : (1.0 + lambda) * res.gamma[i] - (i == v ? lambda : 0.0);
        change += std::abs(next - res.gamma[i]);
        res.gamma[i] = std::max(0.0, next);
      }
      for (std::size_t i = 0; i < T; ++i) mg[i] = (1.0 + lambda) * mg[i] - lambda * gram(i, v);
      res.objective = (1.0 + lambda) * (1.0 + lambda) * aa - 2.0 * lambda * (1.0 + lambda) * ab + lambda * lambda * bb;
    } else {
      const double ab = mg[t];
      const double bb = gram(t, t);
      const double keep = line_search_delta(aa, ab, bb);  // weight on the current point
      const double step = 1.0 - keep;
      for (std::size_t i = 0; i < T; ++i) {
        const double next = keep * res.gamma[i] + (i == t ? step : 0.0);
        change += std::abs(next - res.gamma[i]);
        res.gamma[i] = next;
      }
      // M (keep g + step e_t) = keep Mg + step M[:, t]
      for (std::size_t i = 0; i < T; ++i) mg[i] = keep * mg[i] + step * gram(i, t);
      res.objective = keep * keep * aa + 2.0 * keep * step * ab + step * step * bb;
    }
    res.objective_history.push_back(res.objective);
    res.iterations = it + 1;
    if (change == 0.0) break;
  }
  return res;
}

FrankWolfeResult frank_wolfe_gamma(const std::vector<Vec>& gradients, const FrankWolfeOptions& options) {
  const std::size_t T = gradients.size();
  if (T == 0) throw ShapeError("Frank-Wolfe needs at least one gradient");
  Matrix gram(T, T);
  for (std::size_t i = 0; i < T; ++i) {
    check_size(gradients[i].size(), gradients[0].size(), "Frank-Wolfe gradient");
    for (std::size_t j = i; j < T; ++j) gram(i, j) = gram(j, i) = dot(gradients[i], gradients[j]);
  }
  return frank_wolfe_gamma_gram(gram, options);
}

Vec mgd_direction(const std::vector<Vec>& gradients, std::span<const double> gamma) {
  check_size(gamma.size(), gradients.size(), "MGD weights");
  if (gradients.empty()) throw ShapeError("MGD direction of an empty gradient set");
  Vec out(gradients.front().size(), 0.0);
  for (std::size_t t = 0; t < gradients.size(); ++t) {
    check_size(gradients[t].size(), out.size(), "MGD gradient");
    if (gamma[t] != 0.0) axpy(gamma[t], gradients[t], out);
  }
  return out;
}

std::vector<bool> gate_constrained_gradient(std::span<const double> predictions,
                                            std::span<const double> constraints) {
  if (predictions.empty()) throw ShapeError("gating needs at least one objective");
  check_size(constraints.size(), predictions.size() - 1, "constraint vector");
  std::vector<bool> active(predictions.size(), true);
  for (std::size_t m = 1; m < predictions.size(); ++m) active[m] = !(predictions[m] <= constraints[m - 1]);
  return active;
}

std::vector<bool> gate_constrained_gradient(std::vector<Vec>& objective_gradients,
                                            std::span<const double> predictions,
                                            std::span<const double> constraints) {
  check_size(objective_gradients.size(), predictions.size(), "per-objective gradients");
  auto active = gate_constrained_gradient(predictions, constraints);
  for (std::size_t m = 0; m < active.size(); ++m) {
    if (!active[m]) std::fill(objective_gradients[m].begin(), objective_gradients[m].end(), 0.0);
  }
  return active;
}

}  // namespace modnas
