#include "modnas/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "modnas/errors.hpp"

namespace modnas {

Vec linear_forward(std::span<const double> x, std::span<const double> weight,
                   std::span<const double> bias) {
  const std::size_t out = bias.size();
  const std::size_t in = x.size();
  check_size(weight.size(), out * in, "linear weight");
  Vec y(bias.begin(), bias.end());
  for (std::size_t r = 0; r < out; ++r) {
    const double* row = weight.data() + r * in;
    double s = 0.0;
    for (std::size_t c = 0; c < in; ++c) s += row[c] * x[c];
    y[r] += s;
  }
  return y;
}

Vec linear_backward(std::span<const double> x, std::span<const double> weight,
                    std::span<const double> upstream, std::span<double> weight_grad,
                    std::span<double> bias_grad) {
  const std::size_t out = upstream.size();
  const std::size_t in = x.size();
  check_size(weight.size(), out * in, "linear weight");
  check_size(weight_grad.size(), out * in, "linear weight grad");
  check_size(bias_grad.size(), out, "linear bias grad");
  Vec dx(in, 0.0);
  for (std::size_t r = 0; r < out; ++r) {
    const double u = upstream[r];
    bias_grad[r] += u;
    if (u == 0.0) continue;
    const double* row = weight.data() + r * in;
    double* grow = weight_grad.data() + r * in;
    for (std::size_t c = 0; c < in; ++c) {
      grow[c] += u * x[c];
      dx[c] += u * row[c];
    }
  }
  return dx;
}

Vec linear_forward(std::span<const double> x, const Matrix& weight, std::span<const double> bias) {
  check_size(x.size(), weight.cols(), "linear input");
  check_size(bias.size(), weight.rows(), "linear bias");
  return linear_forward(x, std::span<const double>(weight.data()), bias);
}

Vec linear_backward(std::span<const double> x, const Matrix& weight, std::span<const double> upstream,
                    Matrix& weight_grad, std::span<double> bias_grad) {
  check_size(x.size(), weight.cols(), "linear input");
  check_size(upstream.size(), weight.rows(), "linear upstream");
  return linear_backward(x, std::span<const double>(weight.data()), upstream,
                         std::span<double>(weight_grad.data()), bias_grad);
}

Vec softmax_tempered(std::span<const double> z, double tau) {
  if (!(tau > 0.0)) throw ParameterError("softmax temperature must be positive, got " + std::to_string(tau));
  if (z.empty()) throw ShapeError("softmax of an empty vector");
  const double zmax = *std::max_element(z.begin(), z.end());
  Vec p(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp((z[i] - zmax) / tau);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

Vec softmax_backward(std::span<const double> probs, std::span<const double> upstream, double tau) {
  check_size(upstream.size(), probs.size(), "softmax upstream");
  const double pu = dot(probs, upstream);
  Vec dz(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) dz[i] = probs[i] * (upstream[i] - pu) / tau;
  return dz;
}

Vec relu_forward(std::span<const double> x) {
  Vec y(x.begin(), x.end());
  for (double& v : y) v = v > 0.0 ? v : 0.0;
  return y;
}

Vec relu_backward(std::span<const double> x, std::span<const double> upstream) {
  check_size(upstream.size(), x.size(), "relu upstream");
  Vec dx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? upstream[i] : 0.0;
  return dx;
}

double mse_loss(std::span<const double> pred, std::span<const double> target) {
  check_size(target.size(), pred.size(), "mse target");
  if (pred.empty()) throw ShapeError("mse of empty vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

Vec mse_backward(std::span<const double> pred, std::span<const double> target, double upstream) {
  check_size(target.size(), pred.size(), "mse target");
  Vec g(pred.size());
  const double scale = 2.0 * upstream / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) g[i] = scale * (pred[i] - target[i]);
  return g;
}

Vec embedding_lookup(std::span<const double> table, std::size_t dim, std::size_t index) {
  if (dim == 0 || table.size() % dim != 0) throw ShapeError("embedding table is not a multiple of dim");
  const std::size_t rows = table.size() / dim;
  if (index >= rows) {
    throw IndexError("embedding index " + std::to_string(index) + " out of range [0, " +
                     std::to_string(rows) + ")");
  }
  auto row = table.subspan(index * dim, dim);
  return Vec(row.begin(), row.end());
}

void embedding_backward(std::span<double> table_grad, std::size_t dim, std::size_t index,
                        std::span<const double> upstream, double scale) {
  check_size(upstream.size(), dim, "embedding upstream");
  if (dim == 0 || table_grad.size() % dim != 0) throw ShapeError("embedding grad is not a multiple of dim");
  if (index >= table_grad.size() / dim) throw IndexError("embedding index out of range");
  double* row = table_grad.data() + index * dim;
  for (std::size_t i = 0; i < dim; ++i) row[i] += scale * upstream[i];
}

}  // namespace modnas
