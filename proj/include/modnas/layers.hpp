#pragma once

// Differentiable building blocks with hand-written backward passes.
//
// Weights are passed as row-major spans of shape (out, in); the output width
// is taken from the bias. Backward functions accumulate (+=) into the supplied
// gradient spans and return the gradient with respect to the layer input.

#include <span>

#include "modnas/tensor.hpp"

namespace modnas {

Vec linear_forward(std::span<const double> x, std::span<const double> weight,
                   std::span<const double> bias);
Vec linear_backward(std::span<const double> x, std::span<const double> weight,
                    std::span<const double> upstream, std::span<double> weight_grad,
                    std::span<double> bias_grad);

Vec linear_forward(std::span<const double> x, const Matrix& weight, std::span<const double> bias);
Vec linear_backward(std::span<const double> x, const Matrix& weight, std::span<const double> upstream,
                    Matrix& weight_grad, std::span<double> bias_grad);

/// exp(z_i / tau) / sum_j exp(z_j / tau), stabilized by subtracting max(z).
Vec softmax_tempered(std::span<const double> z, double tau = 1.0);
/// Vector-Jacobian product of softmax_tempered, given its output `probs`.
Vec softmax_backward(std::span<const double> probs, std::span<const double> upstream,
                     double tau = 1.0);

Vec relu_forward(std::span<const double> x);
Vec relu_backward(std::span<const double> x, std::span<const double> upstream);

/// Mean squared error, (1/n) * sum (pred - target)^2.
double mse_loss(std::span<const double> pred, std::span<const double> target);
Vec mse_backward(std::span<const double> pred, std::span<const double> target, double upstream = 1.0);

/// Row `index` of a (rows, dim) table.
Vec embedding_lookup(std::span<const double> table, std::size_t dim, std::size_t index);
/// Adds `scale * upstream` into row `index` of the gradient table; other rows untouched.
void embedding_backward(std::span<double> table_grad, std::size_t dim, std::size_t index,
                        std::span<const double> upstream, double scale = 1.0);

}  // namespace modnas
