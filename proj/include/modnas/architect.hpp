#pragma once

// Discrete architecture sampling with straight-through gradients.
//
// Both estimators return an exactly one-hot forward value per dimension. The
// backward pass routes the upstream gradient through a surrogate expression
// pi(logits); quantities marked "detached" below are evaluated in the forward
// pass and treated as constants by the backward pass.
//
// ReinMax, with p = softmax(logits) and D the drawn one-hot:
//   s  = (D + softmax_tau(logits)) / 2                     (detached)
//   pi = 2 softmax(ln s - logits (detached) + logits) - p / 2
// At the sampled point the first softmax evaluates to s, so
//   d/dlogits = 2 J_softmax(s) - J_softmax(p) / 2.
//
// Straight-through Gumbel-softmax, with g ~ Gumbel(0, 1):
//   forward  = onehot(argmax(logits + g))
//   pi       = softmax_tau(logits + g)

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "modnas/archspace.hpp"
#include "modnas/rng.hpp"

namespace modnas {

enum class Estimator { reinmax, gumbel_st };

Estimator parse_estimator(const std::string& name);
std::string to_string(Estimator e);

struct DimSample {
  Estimator estimator = Estimator::reinmax;
  double tau = 1.0;
  std::size_t choice = 0;
  Vec sampled_logits;
  Vec forward;   // one-hot
  Vec pi;        // gradient carrier evaluated at the sampled logits
  Vec probs;     // softmax(logits)
  Vec soft;      // ReinMax: s; Gumbel: softmax_tau(logits + g)
  Vec gumbel;    // Gumbel perturbation (empty for ReinMax)
  double draw = 0.0;  // uniform used for the categorical draw (ReinMax)

  /// d loss / d logits given d loss / d forward.
  Vec backward(std::span<const double> upstream) const;
  /// forward + pi(logits) - pi(sampled logits), with detached parts frozen.
  /// Equals `forward` at the sampled logits; its derivative is `backward`.
  Vec relaxed_value(std::span<const double> logits) const;
};

DimSample reinmax_sample(std::span<const double> logits, double tau, Rng& rng);
DimSample gumbel_st_sample(std::span<const double> logits, double tau, Rng& rng);

struct ArchSample {
  std::vector<DimSample> dims;
  ArchConfig config;
  Vec forward;  // concatenated one-hot encoding

  Vec backward(const ArchSpace& space, std::span<const double> upstream) const;
  Vec relaxed_value(const ArchSpace& space, std::span<const double> logits) const;
};

/// Independent per-dimension samples; dimension d draws from `rng`.
ArchSample sample_architecture(const ArchSpace& space, std::span<const double> logits, Estimator estimator,
                               double tau, Rng& rng);

/// Dimension d draws from Rng::substream(seed, {step, device, d}).
ArchSample sample_architecture(const ArchSpace& space, std::span<const double> logits, Estimator estimator,
                               double tau, std::uint64_t seed, std::uint64_t step, std::uint64_t device);

}  // namespace modnas
