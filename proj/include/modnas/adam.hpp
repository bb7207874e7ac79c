#pragma once

#include <span>

#include "modnas/param_store.hpp"

namespace modnas {

struct AdamOptions {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-3;
  bool decoupled = false;      // true: shrink weights directly (AdamW); false: L2 term added to the gradient
};

/// Adam over the flat layout of a ParamStore.
class Adam {
 public:
  Adam(std::size_t num_params, AdamOptions options);

  /// One update along `grad` (flat layout). Parameters move against the gradient.
  void step(ParamStore& params, std::span<const double> grad);
  /// Same, using the gradients stored in `params`.
  void step(ParamStore& params);

  const AdamOptions& options() const noexcept { return opt_; }
  void set_lr(double lr) { opt_.lr = lr; }
  long steps_taken() const noexcept { return t_; }

 private:
  AdamOptions opt_;
  Vec m_;
  Vec v_;
  long t_ = 0;
};

/// Plain gradient step: params -= lr * grad.
void sgd_step(ParamStore& params, std::span<const double> grad, double lr);

}  // namespace modnas
