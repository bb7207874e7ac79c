#include "modnas/tensor.hpp"

#include <cmath>

#include "modnas/errors.hpp"

namespace modnas {

Matrix::Matrix(std::size_t rows, std::size_t cols, Vec data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  check_size(data_.size(), rows * cols, "Matrix data");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_size(b.size(), a.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  check_size(y.size(), x.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vec add(std::span<const double> a, std::span<const double> b) {
  check_size(b.size(), a.size(), "add");
  Vec out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Vec sub(std::span<const double> a, std::span<const double> b) {
  check_size(b.size(), a.size(), "sub");
  Vec out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Vec scaled(std::span<const double> a, double s) {
  Vec out(a.begin(), a.end());
  for (double& v : out) v *= s;
  return out;
}

Vec matvec(const Matrix& w, std::span<const double> x) {
  check_size(x.size(), w.cols(), "matvec input");
  Vec y(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double* row = w.data().data() + r * w.cols();
    double s = 0.0;
    for (std::size_t c = 0; c < w.cols(); ++c) s += row[c] * x[c];
    y[r] = s;
  }
  return y;
}

Vec matvec_transposed(const Matrix& w, std::span<const double> x) {
  check_size(x.size(), w.rows(), "matvec_transposed input");
  Vec y(w.cols(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    const double* row = w.data().data() + r * w.cols();
    for (std::size_t c = 0; c < w.cols(); ++c) y[c] += row[c] * xr;
  }
  return y;
}

bool all_finite(std::span<const double> a) {
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace modnas
