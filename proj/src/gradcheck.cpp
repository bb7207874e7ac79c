#include "modnas/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "modnas/errors.hpp"

namespace modnas {

namespace {

double checked(double v) {
  if (!std::isfinite(v)) throw EvaluationError("finite-difference probe produced a non-finite value");
  return v;
}

template <typename Eval, typename Set>
double run_check(std::size_t n, std::span<const double> analytic, const GradCheckOptions& opt, Eval eval,
                 Set set_coord) {
  check_size(analytic.size(), n, "analytic gradient");
  std::vector<std::size_t> coords = opt.coords;
  if (coords.empty()) {
    coords.resize(n);
    for (std::size_t i = 0; i < n; ++i) coords[i] = i;
  }
  const double h = opt.step;
  double worst = 0.0;
  for (std::size_t i : coords) {
    if (i >= n) throw IndexError("gradient check coordinate out of range");
    const double fp = checked(set_coord(i, +h, eval));
    const double fm = checked(set_coord(i, -h, eval));
    const double fd = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic[i] - fd) / std::max(1.0, std::abs(fd)));
  }
  return worst;
}

}  // namespace

double finite_diff_check(const std::function<double(std::span<const double>)>& f, Vec x,
                         std::span<const double> analytic, const GradCheckOptions& options) {
  checked(f(x));
  auto probe = [&x](std::size_t i, double delta, const auto& eval) {
    const double saved = x[i];
    x[i] = saved + delta;
    const double v = eval();
    x[i] = saved;
    return v;
  };
  return run_check(x.size(), analytic, options, [&] { return f(x); }, probe);
}

double finite_diff_check(const std::function<double(const ParamStore&)>& f, ParamStore& params,
                         std::span<const double> analytic, const GradCheckOptions& options) {
  checked(f(params));
  // map flat index -> (block, offset)
  std::vector<std::pair<ParamBlock*, std::size_t>> where;
  where.reserve(params.num_params());
  for (auto& b : params.blocks()) {
    for (std::size_t j = 0; j < b.value.size(); ++j) where.emplace_back(&b, j);
  }
  auto probe = [&where](std::size_t i, double delta, const auto& eval) {
    double& slot = where[i].first->value[where[i].second];
    const double saved = slot;
    slot = saved + delta;
    const double v = eval();
    slot = saved;
    return v;
  };
  return run_check(params.num_params(), analytic, options, [&] { return f(params); }, probe);
}

}  // namespace modnas
