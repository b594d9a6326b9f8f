#include "invm/optim.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace invm::optim {

LbfgsResult lbfgs_minimize(const ObjectiveFn& fg, RVec x0, const LbfgsOptions& opts) {
  const int n = int(x0.size());
  RVec x = std::move(x0), g(n);
  double f = fg(x, &g);

  std::deque<RVec> S, Y;
  std::deque<double> rho;

  LbfgsResult res;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    double gn = g.norm();
    if (gn <= opts.grad_tol * (1.0 + std::abs(f)) || f <= opts.f_abs_floor) {
      res.converged = true;
      break;
    }

    // two-loop recursion
    RVec q = g;
    std::vector<double> alpha(S.size());
    for (int i = int(S.size()) - 1; i >= 0; --i) {
      alpha[i] = rho[i] * S[i].dot(q);
      q -= alpha[i] * Y[i];
    }
    double gamma = 1.0;
    if (!S.empty()) {
      double yy = Y.back().squaredNorm();
      if (yy > 1e-300) gamma = S.back().dot(Y.back()) / yy;
    }
    RVec d = gamma * q;
    for (size_t i = 0; i < S.size(); ++i) {
      double beta = rho[i] * Y[i].dot(d);
      d += (alpha[i] - beta) * S[i];
    }
    d = -d;
    double dg = d.dot(g);
    if (dg >= 0.0) {  // not a descent direction; reset to steepest descent
      d = -g;
      dg = -g.squaredNorm();
      S.clear();
      Y.clear();
      rho.clear();
    }

    // Armijo backtracking
    double step = 1.0;
    const double c1 = 1e-4;
    RVec xn(n), gn2(n);
    double fn = f;
    bool ok = false;
    for (int ls = 0; ls < 50; ++ls) {
      xn = x + step * d;
      fn = fg(xn, &gn2);
      if (std::isfinite(fn) && fn <= f + c1 * step * dg) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok || (x - xn).norm() <= opts.step_tol * (1.0 + x.norm())) break;

    RVec s = xn - x, y = gn2 - g;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      S.push_back(s);
      Y.push_back(y);
      rho.push_back(1.0 / sy);
      if (int(S.size()) > opts.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    x = xn;
    f = fn;
    g = gn2;
  }
  res.x = x;
  res.f = f;
  res.iters = it;
  return res;
}

ObjectiveFn with_fd_gradient(std::function<double(const RVec&)> f, double h) {
  return [f, h](const RVec& x, RVec* grad) {
    double v = f(x);
    if (grad) {
      grad->resize(x.size());
      RVec xp = x;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + h;
        double fp = f(xp);
        xp[i] = x[i] - h;
        double fm = f(xp);
        xp[i] = x[i];
        (*grad)[i] = (fp - fm) / (2 * h);
      }
    }
    return v;
  };
}

double bisect_flip(const std::function<bool(double)>& pred, double lo, double hi,
                   bool want, double rel_tol, int max_iter) {
  bool plo = pred(lo), phi = pred(hi);
  if (plo == phi) throw std::runtime_error("bisect_flip: no sign change in bracket");
  for (int i = 0; i < max_iter && (hi - lo) > rel_tol * std::max(1e-300, std::abs(hi)); ++i) {
    double mid = 0.5 * (lo + hi);
    if (pred(mid) == plo)
      lo = mid;
    else
      hi = mid;
  }
  return (plo == want) ? lo : hi;
}

}  // namespace invm::optim
