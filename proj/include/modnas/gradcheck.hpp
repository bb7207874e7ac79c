#pragma once

#include <functional>
#include <span>
#include <vector>

#include "modnas/param_store.hpp"

namespace modnas {

struct GradCheckOptions {
  double step = 1e-5;                 // central-difference step h
  std::vector<std::size_t> coords;    // flat coordinates to probe; empty = all
};

/// max_i |g_analytic[i] - g_fd[i]| / max(1, |g_fd[i]|) using central differences.
/// Throws EvaluationError when `f` returns a non-finite value.
double finite_diff_check(const std::function<double(std::span<const double>)>& f, Vec x,
                         std::span<const double> analytic, const GradCheckOptions& options = {});

/// Same check where `f` reads the current values of `params`. Values are restored afterwards.
double finite_diff_check(const std::function<double(const ParamStore&)>& f, ParamStore& params,
                         std::span<const double> analytic, const GradCheckOptions& options = {});

}  // namespace modnas
