#pragma once

// MetaHypernetwork: maps a preference vector r and a device feature d_t to
// unnormalized architecture logits.
//
//   w     = softmax(W0 d_t + b0)                         (K mixture weights)
//   h_k   = concat_{m=2..M} E_k^m[quantize(r_m, n)]      (bank member k)
//   logits = sum_k w_k h_k
//
// The logit vector has one block per hardware objective; block sizes split
// the encoding length as evenly as possible, earlier objectives first.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "modnas/archspace.hpp"
#include "modnas/moo.hpp"
#include "modnas/param_store.hpp"

namespace modnas {

struct HypernetOptions {
  std::size_t bank_size = 50;   // K
  std::size_t bins = 100;       // n_m rows per embedding table
  double init_std = 0.01;
  std::uint64_t seed = 0;
};

/// floor(r * bins) clamped to [0, bins - 1]. Throws ParameterError outside [0, 1].
std::size_t quantize_preference(double r, std::size_t bins);

class MetaHypernetwork {
 public:
  struct Forward {
    Vec features;
    Vec mix;                        // softmax weights over the bank
    std::vector<std::size_t> rows;  // quantized row per hardware objective
    Vec logits;
  };

  MetaHypernetwork() = default;
  MetaHypernetwork(const ArchSpace& space, std::size_t num_objectives, std::size_t feature_size,
                   const HypernetOptions& options = {});

  const ArchSpace& space() const noexcept { return space_; }
  std::size_t num_objectives() const noexcept { return num_objectives_; }
  std::size_t feature_size() const noexcept { return feature_size_; }
  std::size_t bank_size() const noexcept { return bank_; }
  std::size_t bins() const noexcept { return bins_; }
  std::size_t output_size() const noexcept { return space_.encoding_size(); }
  /// Width and start of the logit block owned by hardware objective m (m >= 2).
  std::size_t block_size(std::size_t m) const;
  std::size_t block_offset(std::size_t m) const;

  Forward forward(const PreferenceVector& r, std::span<const double> features) const;
  Vec logits(const PreferenceVector& r, std::span<const double> features) const {
    return forward(r, features).logits;
  }
  /// Accumulates d loss / d params into the parameter gradients given
  /// d loss / d logits.
  void backward(const Forward& fwd, std::span<const double> upstream);

  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  /// Checkpoint in ParamStore format tagged with the space descriptor hash.
  void save(const std::filesystem::path& path) const;
  /// Throws UsageError when the checkpoint belongs to another space.
  static MetaHypernetwork load(const std::filesystem::path& path, const ArchSpace& space);
  static MetaHypernetwork from_params(ParamStore params, const ArchSpace& space);

 private:
  void init_layout();

  ArchSpace space_;
  std::size_t num_objectives_ = 2;
  std::size_t feature_size_ = 0;
  std::size_t bank_ = 0;
  std::size_t bins_ = 0;
  std::vector<std::size_t> block_sizes_;
  std::vector<std::size_t> block_offsets_;
  ParamStore params_;
};

struct PretrainOptions {
  double lr = 1e-2;
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  std::size_t holdout = 64;     // held-out (r, d) pairs for the KL check
  double kl_target = 1e-3;
  std::uint64_t seed = 0;
};

struct PretrainReport {
  std::size_t epochs = 0;
  Vec kl_history;   // held-out max KL after each epoch, starting with the initial value
  double final_kl = 0.0;
};

/// max over dimensions of KL(uniform || softmax(logits_d)).
double max_uniform_kl(const ArchSpace& space, std::span<const double> logits);

/// Drives the per-dimension softmax of the logits toward uniform by
/// minimizing the mean squared logit over sampled (r, d) pairs, where r ~
/// Dir(1) and d is drawn from `feature_pool`. Returns as soon as the held-out
/// max KL drops below the target; throws PretrainingError when the budget
/// runs out first.
PretrainReport pretrain_uniform(MetaHypernetwork& net, const std::vector<Vec>& feature_pool,
                                const PretrainOptions& options = {});

}  // namespace modnas
