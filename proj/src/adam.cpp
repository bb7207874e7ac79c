#include "modnas/adam.hpp"

#include <cmath>

#include "modnas/errors.hpp"

namespace modnas {

Adam::Adam(std::size_t num_params, AdamOptions options)
    : opt_(options), m_(num_params, 0.0), v_(num_params, 0.0) {
  if (!(opt_.lr >= 0.0)) throw ParameterError("Adam learning rate must be non-negative");
}

void Adam::step(ParamStore& params, std::span<const double> grad) {
  check_size(params.num_params(), m_.size(), "Adam parameter count");
  check_size(grad.size(), m_.size(), "Adam gradient");
  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  std::size_t i = 0;
  for (auto& b : params.blocks()) {
    for (double& w : b.value) {
      if (opt_.decoupled) w -= opt_.lr * opt_.weight_decay * w;
      const double g = opt_.decoupled ? grad[i] : grad[i] + opt_.weight_decay * w;
      m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * g;
      v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * g * g;
      w -= opt_.lr * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + opt_.eps);
      ++i;
    }
  }
}

void Adam::step(ParamStore& params) {
  const Vec g = params.flat_grads();
  step(params, g);
}

void sgd_step(ParamStore& params, std::span<const double> grad, double lr) {
  check_size(grad.size(), params.num_params(), "SGD gradient");
  std::size_t i = 0;
  for (auto& b : params.blocks()) {
    for (double& w : b.value) w -= lr * grad[i++];
  }
}

}  // namespace modnas
