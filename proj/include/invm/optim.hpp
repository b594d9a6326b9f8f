#pragma once

#include <functional>

#include "invm/core.hpp"

namespace invm::optim {

/// Objective callback: returns f(x); fills *grad when non-null.
using ObjectiveFn = std::function<double(const RVec&, RVec*)>;

struct LbfgsOptions {
  int max_iter = 200;
  int memory = 10;
  double grad_tol = 1e-10;
  double step_tol = 1e-14;
  double f_abs_floor = -1e300;  // stop early once f drops below this
};

struct LbfgsResult {
  RVec x;
  double f = 0.0;
  int iters = 0;
  bool converged = false;
};

/// Limited-memory BFGS with Armijo backtracking.  Deterministic: fixed
/// iteration order, no randomness, monotone decrease of f.
LbfgsResult lbfgs_minimize(const ObjectiveFn& fg, RVec x0, const LbfgsOptions& opts = {});

/// Wraps a gradient-free objective with central differences.
ObjectiveFn with_fd_gradient(std::function<double(const RVec&)> f, double h = 1e-6);

/// Locates the predicate flip in [lo, hi] given pred(lo) != pred(hi); returns
/// the bracket endpoint on the `want` side after bisection to rel_tol.
double bisect_flip(const std::function<bool(double)>& pred, double lo, double hi,
                   bool want, double rel_tol, int max_iter = 80);

}  // namespace invm::optim
