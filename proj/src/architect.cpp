#include "modnas/architect.hpp"

#include <algorithm>
#include <cmath>

#include "modnas/errors.hpp"
#include "modnas/layers.hpp"

namespace modnas {

namespace {

void require_finite(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("empty logit vector");
  if (!all_finite(logits)) throw NumericError("non-finite architecture logits");
}

void require_tau(double tau) {
  if (!(tau > 0.0)) throw ParameterError("temperature must be positive");
}

Vec one_hot(std::size_t n, std::size_t i) {
  Vec v(n, 0.0);
  v[i] = 1.0;
  return v;
}

// 2 softmax(c + z) - softmax(z) / 2 with c = ln s - z0.
Vec reinmax_pi(std::span<const double> z, std::span<const double> z0, std::span<const double> s) {
  Vec shifted(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) shifted[i] = std::log(s[i]) - z0[i] + z[i];
  const Vec a = softmax_tempered(shifted, 1.0);
  const Vec p = softmax_tempered(z, 1.0);
  Vec pi(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) pi[i] = 2.0 * a[i] - 0.5 * p[i];
  return pi;
}

}  // namespace

Estimator parse_estimator(const std::string& name) {
  if (name == "reinmax") return Estimator::reinmax;
  if (name == "gumbel_st") return Estimator::gumbel_st;
  throw ParameterError("unknown estimator '" + name + "' (expected reinmax or gumbel_st)");
}

std::string to_string(Estimator e) { return e == Estimator::reinmax ? "reinmax" : "gumbel_st"; }

DimSample reinmax_sample(std::span<const double> logits, double tau, Rng& rng) {
  require_finite(logits);
  require_tau(tau);
  DimSample out;
  out.estimator = Estimator::reinmax;
  out.sampled_logits.assign(logits.begin(), logits.end());
  out.tau = tau;
  out.probs = softmax_tempered(logits, 1.0);
  out.draw = rng.uniform();
  std::size_t choice = out.probs.size() - 1;
  double cum = 0.0;
  for (std::size_t i = 0; i < out.probs.size(); ++i) {
    cum += out.probs[i];
    if (out.draw < cum) {
      choice = i;
      break;
    }
  }
  // guard against rounding picking a zero-probability tail entry
  while (out.probs[choice] == 0.0 && choice > 0) --choice;
  out.choice = choice;
  out.forward = one_hot(logits.size(), choice);
  const Vec pt = softmax_tempered(logits, tau);
  out.soft.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out.soft[i] = 0.5 * (out.forward[i] + pt[i]);
  out.pi.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out.pi[i] = 2.0 * out.soft[i] - 0.5 * out.probs[i];
  return out;
}

DimSample gumbel_st_sample(std::span<const double> logits, double tau, Rng& rng) {
  require_finite(logits);
  require_tau(tau);
  DimSample out;
  out.estimator = Estimator::gumbel_st;
  out.sampled_logits.assign(logits.begin(), logits.end());
  out.tau = tau;
  out.probs = softmax_tempered(logits, 1.0);
  out.gumbel.resize(logits.size());
  Vec perturbed(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.gumbel[i] = -std::log(-std::log(rng.uniform_open()));
    perturbed[i] = logits[i] + out.gumbel[i];
  }
  out.choice = static_cast<std::size_t>(std::max_element(perturbed.begin(), perturbed.end()) - perturbed.begin());
  out.forward = one_hot(logits.size(), out.choice);
  out.soft = softmax_tempered(perturbed, tau);
  out.pi = out.soft;
  return out;
}

Vec DimSample::backward(std::span<const double> upstream) const {
  check_size(upstream.size(), forward.size(), "sample upstream gradient");
  if (estimator == Estimator::gumbel_st) return softmax_backward(soft, upstream, tau);
  Vec g = softmax_backward(soft, upstream, 1.0);
  const Vec h = softmax_backward(probs, upstream, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = 2.0 * g[i] - 0.5 * h[i];
  return g;
}

Vec DimSample::relaxed_value(std::span<const double> logits) const {
  check_size(logits.size(), forward.size(), "relaxed logits");
  Vec cur;
  if (estimator == Estimator::gumbel_st) {
    Vec perturbed(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) perturbed[i] = logits[i] + gumbel[i];
    cur = softmax_tempered(perturbed, tau);
  } else {
    cur = reinmax_pi(logits, sampled_logits, soft);
  }
  Vec out(forward.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward[i] + cur[i] - pi[i];
  return out;
}

Vec ArchSample::backward(const ArchSpace& space, std::span<const double> upstream) const {
  check_size(upstream.size(), space.encoding_size(), "sample upstream gradient");
  check_size(dims.size(), space.dims(), "sample dimensions");
  Vec g(space.encoding_size());
  for (std::size_t d = 0; d < dims.size(); ++d) {
    const Vec gd = dims[d].backward(space.block(upstream, d));
    std::copy(gd.begin(), gd.end(), g.begin() + static_cast<std::ptrdiff_t>(space.offset(d)));
  }
  return g;
}

Vec ArchSample::relaxed_value(const ArchSpace& space, std::span<const double> logits) const {
  check_size(logits.size(), space.encoding_size(), "relaxed logits");
  Vec out(space.encoding_size());
  for (std::size_t d = 0; d < dims.size(); ++d) {
    const Vec v = dims[d].relaxed_value(space.block(logits, d));
    std::copy(v.begin(), v.end(), out.begin() + static_cast<std::ptrdiff_t>(space.offset(d)));
  }
  return out;
}

namespace {

template <class RngFor>
ArchSample sample_impl(const ArchSpace& space, std::span<const double> logits, Estimator estimator, double tau,
                       RngFor&& rng_for) {
  check_size(logits.size(), space.encoding_size(), "architecture logits");
  ArchSample s;
  s.config.choices.resize(space.dims());
  s.forward.assign(space.encoding_size(), 0.0);
  for (std::size_t d = 0; d < space.dims(); ++d) {
    Rng& rng = rng_for(d);
    const auto block = space.block(logits, d);
    s.dims.push_back(estimator == Estimator::reinmax ? reinmax_sample(block, tau, rng)
                                                     : gumbel_st_sample(block, tau, rng));
    s.config.choices[d] = s.dims.back().choice;
    s.forward[space.offset(d) + s.dims.back().choice] = 1.0;
  }
  return s;
}

}  // namespace

ArchSample sample_architecture(const ArchSpace& space, std::span<const double> logits, Estimator estimator,
                               double tau, Rng& rng) {
  return sample_impl(space, logits, estimator, tau, [&](std::size_t) -> Rng& { return rng; });
}

ArchSample sample_architecture(const ArchSpace& space, std::span<const double> logits, Estimator estimator,
                               double tau, std::uint64_t seed, std::uint64_t step, std::uint64_t device) {
  Rng current;
  return sample_impl(space, logits, estimator, tau, [&](std::size_t d) -> Rng& {
    current = Rng::substream(seed, {step, device, static_cast<std::uint64_t>(d)});
    return current;
  });
}

}  // namespace modnas
