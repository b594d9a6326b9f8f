#include "invm/extremal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "invm/optim.hpp"

namespace invm::ext {

using domains::HoloMap;

std::string DiscOptions::hash() const {
  std::ostringstream s;
  s << degree << "|" << boundary_samples << "|" << restarts << "|" << seed << "|"
    << fmt_g17(r_eval) << "|" << fmt_g17(margin_req) << "|" << fmt_g17(bisect_rel_tol)
    << "|" << inner_max_iter << "|" << path_segments;
  return hex64(fnv1a(s.str()));
}

CPoint AnalyticDisc::eval(cplx w) const {
  CPoint f = center;
  cplx p = 1.0;
  for (const auto& c : coeffs) {
    p *= w;
    f += c * p;
  }
  return f;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, const char* tag, const CPoint& a, const CPoint& b) {
  std::uint64_t h = fnv1a(tag, seed ^ 0x51ed270b1f2c4a3bULL);
  auto fold = [&h](const CPoint& p) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      std::uint64_t re, im;
      double x = p[i].real(), y = p[i].imag();
      std::memcpy(&re, &x, 8);
      std::memcpy(&im, &y, 8);
      h = fnv1a(hex64(re), h);
      h = fnv1a(hex64(im), h);
    }
  };
  fold(a);
  fold(b);
  return h;
}

// ---------------------------------------------------------------------------
// Penalized feasibility problem for polynomial discs.
//
// Two modes share the machinery:
//   metric: f(w) = z + alpha v w + sum_{k>=2} c_k w^k      (c_1 pinned)
//   chord:  f(w) = z + c_1 w + sum_{k>=2} c_k w^k with f(t) = target
//           (c_1 eliminated: c_1 = (target - z - sum c_k t^k)/t)
// ---------------------------------------------------------------------------
struct DiscProblem {
  const Domain* dom = nullptr;
  DiscOptions opts;
  CPoint z;
  int n = 0;
  double scale = 1.0;  // |rho(z)| normalization for the penalty

  bool chord_mode = false;
  CVec c1_metric;   // alpha*v in metric mode
  CPoint delta;     // target - z in chord mode
  double t = 0.0;   // chord parameter

  std::vector<cplx> w;                  // boundary sample points
  std::vector<std::vector<cplx>> wpow;  // wpow[i][k], k = 0..N

  int free_coeffs() const { return opts.degree - 1; }
  int dim() const { return std::max(0, free_coeffs() * 2 * n); }

  void init(const Domain& d, const CPoint& base, const DiscOptions& o) {
    dom = &d;
    opts = o;
    z = base;
    n = d.dim;
    scale = std::max(std::abs(d.rho(base)), 1e-14);
    int M = opts.boundary_samples;
    w.resize(M);
    wpow.assign(M, std::vector<cplx>(opts.degree + 1));
    for (int i = 0; i < M; ++i) {
      double th = 2.0 * M_PI * i / M;
      w[i] = opts.r_eval * cplx(std::cos(th), std::sin(th));
      wpow[i][0] = 1.0;
      for (int k = 1; k <= opts.degree; ++k) wpow[i][k] = wpow[i][k - 1] * w[i];
    }
  }

  std::vector<CVec> unpack(const RVec& x) const {
    std::vector<CVec> c(free_coeffs(), CVec::Zero(n));
    int p = 0;
    for (int k = 0; k < free_coeffs(); ++k)
      for (int j = 0; j < n; ++j) {
        c[k][j] = cplx(x[p], x[p + 1]);
        p += 2;
      }
    return c;
  }

  CVec effective_c1(const std::vector<CVec>& c) const {
    if (!chord_mode) return c1_metric;
    CVec s = delta;
    double tk = t;
    for (int k = 0; k < free_coeffs(); ++k) {
      tk *= t;  // t^{k+2}
      s -= c[k] * tk;
    }
    return CVec(s / t);
  }

  CPoint disc_point(const std::vector<CVec>& c, const CVec& c1, int i) const {
    CPoint f = z + c1 * wpow[i][1];
    for (int k = 0; k < free_coeffs(); ++k) f += c[k] * wpow[i][k + 2];
    return f;
  }

  double max_margin_raw(const RVec& x) const {
    auto c = unpack(x);
    CVec c1 = effective_c1(c);
    double m = -1e300;
    for (size_t i = 0; i < w.size(); ++i) m = std::max(m, dom->rho(disc_point(c, c1, i)));
    return m;
  }

  bool feasible_x(const RVec& x) const {
    return max_margin_raw(x) / scale <= -opts.margin_req;
  }

  double penalty(const RVec& x, RVec* grad, double beta) const {
    auto c = unpack(x);
    CVec c1 = effective_c1(c);
    int M = int(w.size());
    double P = 0.0;
    if (grad) grad->setZero(x.size());
    for (int i = 0; i < M; ++i) {
      CPoint f = disc_point(c, c1, i);
      double rh = dom->rho(f) / scale + opts.margin_req;
      P += softplus(rh, beta) / M;
      if (!grad) continue;
      double bt = beta * rh;
      double sig = bt > 30 ? 1.0 : (bt < -30 ? std::exp(bt) : 1.0 / (1.0 + std::exp(-bt)));
      if (sig < 1e-14) continue;
      double wgt = sig / (M * scale);
      CVec dz = dom->dz(f);
      int p = 0;
      for (int k = 0; k < free_coeffs(); ++k) {
        // chord mode folds the c_1 elimination into the sensitivity
        cplx pik = chord_mode ? wpow[i][k + 2] - std::pow(t, k + 1) * wpow[i][1]
                              : wpow[i][k + 2];
        for (int j = 0; j < n; ++j) {
          cplx s = dz[j] * pik;
          (*grad)[p] += wgt * 2.0 * s.real();
          (*grad)[p + 1] += wgt * (-2.0) * s.imag();
          p += 2;
        }
      }
    }
    return P;
  }

  // Multi-stage sharpening; stops as soon as the hard margin clears.
  bool solve(RVec& x) const {
    if (dim() == 0) return feasible_x(x);
    static const double betas[] = {32.0, 512.0, 8192.0};
    int per_stage = std::max(10, opts.inner_max_iter / 3);
    for (double beta : betas) {
      if (feasible_x(x)) return true;
      optim::LbfgsOptions lo;
      lo.max_iter = per_stage;
      lo.grad_tol = 1e-12;
      auto fg = [this, beta](const RVec& xx, RVec* g) { return penalty(xx, g, beta); };
      x = optim::lbfgs_minimize(fg, x, lo).x;
    }
    return feasible_x(x);
  }

  // Tries warm start, zero start and seeded jitters, in that order.
  bool feasible_with_restarts(RVec& io_x, Rng& rng, double jitter_scale) const {
    if (dim() == 0) {
      io_x = RVec();
      RVec empty;
      return feasible_x(empty);
    }
    std::vector<RVec> starts;
    if (io_x.size() == dim()) starts.push_back(io_x);
    starts.push_back(RVec::Zero(dim()));
    int extra = std::max(0, opts.restarts - int(starts.size()));
    for (int r = 0; r < extra; ++r) {
      RVec x(dim());
      double sc = jitter_scale * std::pow(0.5, r);
      for (int i = 0; i < dim(); ++i) x[i] = sc * rng.uniform(-1.0, 1.0);
      starts.push_back(x);
    }
    for (auto& x : starts) {
      if (solve(x)) {
        io_x = x;
        return true;
      }
    }
    return false;
  }
};

double ray_boundary_hit(const Domain& d, const CPoint& from, const CVec& dir,
                        double* t_guess = nullptr) {
  // Largest t with rho(from + t*dir) = 0 crossing; -1 when the ray stays inside.
  double r0 = d.rho(from);
  if (r0 >= 0) throw std::invalid_argument("ray_boundary_hit: start not interior");
  CVec dz0 = d.dz(from);
  cplx along = hinner(dir, CVec(dz0.conjugate()));
  double t = t_guess && *t_guess > 0
                 ? *t_guess
                 : std::abs(r0) / (2.0 * std::abs(along) + 1e-12);
  t = std::clamp(t, 1e-8, 1e6);
  while (d.rho(from + t * dir) < 0) {
    t *= 2.0;
    if (t > 1e12) return -1.0;
  }
  double lo = 0.0, hi = t;
  for (int i = 0; i < 100 && (hi - lo) > 1e-13 * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    (d.rho(from + mid * dir) < 0 ? lo : hi) = mid;
  }
  if (t_guess) *t_guess = hi;
  return 0.5 * (lo + hi);
}

}  // namespace

// ---------------------------------------------------------------------------
// Kobayashi infinitesimal upper bound.
// ---------------------------------------------------------------------------
MetricResult kobayashi_infinitesimal_upper(const Domain& d, const CPoint& z,
                                           const CVec& v, const DiscOptions& opts) {
  if (!d.contains(z)) throw std::invalid_argument(d.name + ": base point not interior");
  if (v.norm() < 1e-300) throw std::invalid_argument("kobayashi_infinitesimal_upper: v = 0");

  DiscProblem prob;
  prob.init(d, z, opts);
  Rng rng(mix_seed(opts.seed, "fk_upper", z, v));

  // Affine feasible scale along the complex line of v.
  auto affine_feasible = [&](double a) {
    prob.c1_metric = a * v;
    double m = -1e300;
    auto c = prob.unpack(RVec::Zero(prob.dim()));
    for (size_t i = 0; i < prob.w.size(); ++i)
      m = std::max(m, d.rho(prob.disc_point(c, prob.c1_metric, i)));
    return m / prob.scale <= -opts.margin_req;
  };
  double a_lo = std::abs(d.rho(z)) / (2.0 * std::abs(hinner(v, CVec(d.dz(z).conjugate()))) + 1e-12);
  a_lo = std::clamp(a_lo, 1e-10, 1e8);
  while (!affine_feasible(a_lo)) {
    a_lo *= 0.5;
    if (a_lo < 1e-14)
      throw std::runtime_error(d.name + ": no feasible disc (affine disc exits the domain)");
  }
  double a_hi = a_lo;
  while (affine_feasible(a_hi * 2.0) && a_hi < 1e14) a_hi *= 2.0;
  double alpha_aff = optim::bisect_flip(affine_feasible, a_hi, a_hi * 2.0, true, 1e-6);

  double alpha_star = alpha_aff;
  RVec best_x = RVec::Zero(prob.dim());

  if (opts.degree >= 2) {
    double jitter = 0.15 * alpha_aff * v.norm();
    RVec warm = best_x;
    auto feasible = [&](double a) {
      prob.c1_metric = a * v;
      RVec x = warm;
      bool ok = prob.feasible_with_restarts(x, rng, jitter);
      if (ok) {
        warm = x;
        if (a > alpha_star) {
          alpha_star = a;
          best_x = x;
        }
      }
      return ok;
    };
    double lo = alpha_aff, hi = alpha_aff * 2.0;
    int grow = 0;
    while (grow < 40 && feasible(hi)) {
      lo = hi;
      hi *= 2.0;
      ++grow;
    }
    for (int i = 0; i < 80 && (hi - lo) > opts.bisect_rel_tol * hi; ++i) {
      double mid = 0.5 * (lo + hi);
      (feasible(mid) ? lo : hi) = mid;
    }
    alpha_star = std::max(alpha_star, lo);
  }

  // Rebuild the witness disc at alpha*.
  prob.c1_metric = alpha_star * v;
  AnalyticDisc disc;
  disc.center = z;
  disc.r_eval = opts.r_eval;
  auto c = prob.unpack(best_x.size() == prob.dim() ? best_x : RVec::Zero(prob.dim()));
  disc.coeffs.push_back(prob.c1_metric);
  for (auto& ck : c) disc.coeffs.push_back(ck);
  double m = -1e300;
  for (size_t i = 0; i < prob.w.size(); ++i)
    m = std::max(m, d.rho(prob.disc_point(c, prob.c1_metric, i)));
  disc.margin = m;
  if (disc.margin >= 0)
    throw std::runtime_error(d.name + ": internal error, reported disc not feasible");

  MetricResult res;
  // The disc certified on |w| <= r_eval reparametrizes to all of the unit
  // disc with derivative alpha* r_eval v.
  res.metric = {1.0 / (alpha_star * opts.r_eval), MetricKind::kobayashi, BoundTag::upper};
  res.disc = disc;
  return res;
}

// ---------------------------------------------------------------------------
// Functional lower bounds.
// ---------------------------------------------------------------------------
namespace {

// Supporting functional of a balanced convex domain at the boundary point q:
// l(zeta) = <zeta, n(q)> / <q, n(q)>, with |l| <= 1 on the domain.
struct GaugeFunctional {
  CVec n;
  double denom;
  cplx operator()(const CPoint& p) const { return hinner(p, n) / denom; }
};

GaugeFunctional gauge_functional(const Domain& d, const CPoint& q) {
  CVec n = domains::real_gradient(d, q);
  double denom = hinner(q, n).real();
  return {n, denom};
}

// Egg z2-automorphism psi_a(z) = ((1-|a|^2)^{1/2m} z1/(1-conj(a) z2)^{1/m},
//                                 (z2-a)/(1-conj(a) z2)).
struct EggAut {
  int m;
  cplx a;
  CPoint map(const CPoint& z) const {
    cplx den = 1.0 - std::conj(a) * z[1];
    CPoint w(2);
    w[1] = (z[1] - a) / den;
    w[0] = std::pow(1.0 - std::norm(a), 1.0 / (2.0 * m)) * z[0] / std::pow(den, 1.0 / m);
    return w;
  }
  CVec jac_apply(const CPoint& z, const CVec& v) const {
    cplx den = 1.0 - std::conj(a) * z[1];
    double s = std::pow(1.0 - std::norm(a), 1.0 / (2.0 * m));
    CVec w(2);
    w[1] = v[1] * (1.0 - std::norm(a)) / (den * den);
    w[0] = s * v[0] / std::pow(den, 1.0 / m) +
           s * z[0] * (std::conj(a) / double(m)) * v[1] / std::pow(den, 1.0 / m + 1.0);
    return w;
  }
};

// Best value over a parametrized scalar-functional family via multistart
// L-BFGS with numerical gradients; objective must return -value.
double maximize_family(const std::function<double(const RVec&)>& neg_value,
                       const std::vector<RVec>& starts, int iters) {
  double best = -1e300;
  auto fg = optim::with_fd_gradient(neg_value, 1e-5);
  optim::LbfgsOptions lo;
  lo.max_iter = iters;
  for (const auto& s : starts) {
    double v0 = -neg_value(s);
    best = std::max(best, v0);
    auto r = optim::lbfgs_minimize(fg, s, lo);
    best = std::max(best, -r.f);
  }
  return best;
}

// Candidate value of a scalar holomorphic g with data (g(z), dg(z)v):
// Schwarz-Pick pullback of the Poincare metric.
double functional_metric_value(cplx gz, cplx dgv) {
  double r2 = std::norm(gz);
  if (r2 >= 1.0) return 0.0;
  return std::abs(dgv) / (1.0 - r2);
}

struct EggQuery {
  const Domain* d;
  CPoint z, w;  // w unused in metric mode
  CVec v;
  bool distance_mode = false;

  double value(const RVec& p) const {
    cplx a(p[0], p[1]);
    if (std::norm(a) > 0.94) return 0.0;
    CVec u = to_cplx(RVec(p.segment(2, 4)));
    double un = u.norm();
    if (un < 1e-9) return 0.0;
    u /= un;
    EggAut aut{d->egg_m, a};
    double tg = -1;
    double t;
    try {
      t = ray_boundary_hit(*d, CPoint(CPoint::Zero(2)), u, &tg);
    } catch (...) {
      return 0.0;
    }
    if (t <= 0) return 0.0;
    CPoint q = t * u;
    auto l = gauge_functional(*d, q);
    if (l.denom <= 1e-12) return 0.0;
    if (distance_mode) {
      cplx gz = l(aut.map(z)), gw = l(aut.map(w));
      if (std::norm(gz) >= 1.0 || std::norm(gw) >= 1.0) return 0.0;
      return closed_form::poincare_distance(gz, gw);
    }
    CPoint z1 = aut.map(z);
    CVec v1 = aut.jac_apply(z, v);
    return functional_metric_value(l(z1), hinner(v1, l.n) / l.denom);
  }
};

std::vector<RVec> egg_starts(const CPoint& z, const CVec& vdir, Rng& rng, int extra) {
  std::vector<RVec> starts;
  auto mk = [&](cplx a, const CVec& u) {
    RVec p(6);
    p[0] = a.real();
    p[1] = a.imag();
    RVec ur = to_real(u);
    double n = ur.norm();
    p.segment(2, 4) = n > 1e-12 ? RVec(ur / n) : RVec::Ones(4) * 0.5;
    starts.push_back(p);
  };
  cplx a0 = z[1];
  if (std::abs(a0) > 0.9) a0 *= 0.9 / std::abs(a0);
  CVec e1 = CVec::Zero(2), e2 = CVec::Zero(2);
  e1[0] = 1;
  e2[1] = 1;
  mk(a0, vdir);
  mk(a0, e1);
  mk(a0, e2);
  mk(0.0, vdir);
  for (int i = 0; i < extra; ++i)
    mk(0.5 * cplx(rng.uniform(-1, 1), rng.uniform(-1, 1)), to_cplx(rng.sphere(4)));
  return starts;
}

struct HalfPlaneQuery {
  const Domain* d;
  CPoint z, w;
  CVec v;
  bool distance_mode = false;
  std::vector<CPoint> feas_grid;  // boundary samples for non-convex feasibility

  double value(const RVec& p) const {
    CVec u = to_cplx(p);
    double un = u.norm();
    if (un < 1e-9) return 0.0;
    u /= un;
    double t;
    try {
      t = ray_boundary_hit(*d, z, u);
    } catch (...) {
      return 0.0;
    }
    if (t <= 0) return 0.0;
    CPoint q = z + t * u;
    CVec a = d->dz(q);  // l(zeta) = 2 sum a_j (zeta_j - q_j)
    auto ell = [&](const CPoint& x) {
      cplx s = 0;
      for (int j = 0; j < d->dim; ++j) s += a[j] * (x[j] - q[j]);
      return 2.0 * s;
    };
    if (!d->convex) {
      for (const auto& b : feas_grid)
        if (ell(b).real() > 1e-9 * (1.0 + a.norm())) return 0.0;
    }
    cplx lz = ell(z);
    if (lz.real() >= 0) return 0.0;
    if (distance_mode) {
      cplx lw = ell(w);
      if (lw.real() >= 0) return 0.0;
      double mob = std::abs((lz - lw) / (lz + std::conj(lw)));
      return atanh_safe(mob);
    }
    cplx dlv = 0;
    for (int j = 0; j < d->dim; ++j) dlv += a[j] * v[j];
    return std::abs(2.0 * dlv) / (2.0 * std::abs(lz.real()));
  }
};

std::vector<CPoint> boundary_sample_grid(const Domain& d, Rng& rng, int count) {
  std::vector<CPoint> pts;
  for (int i = 0; i < count * 3 && int(pts.size()) < count; ++i) {
    CVec u = to_cplx(rng.sphere(2 * d.dim));
    try {
      double t = ray_boundary_hit(d, d.anchor, u);
      if (t > 0) pts.push_back(d.anchor + t * u);
    } catch (...) {
    }
  }
  return pts;
}

double lower_metric_dispatch(const Domain& d, const CPoint& z, const CVec& v,
                             const DiscOptions& opts, bool* found);
double lower_distance_dispatch(const Domain& d, const CPoint& z, const CPoint& w,
                               const DiscOptions& opts, bool* found);

double lower_metric_dispatch(const Domain& d, const CPoint& z, const CVec& v,
                             const DiscOptions& opts, bool* found) {
  using domains::Kind;
  double best = 0.0;
  bool any = false;
  Rng rng(mix_seed(opts.seed, "fc_lower", z, v));

  switch (d.kind) {
    case Kind::disc:
      best = closed_form::poincare_metric(z[0], v[0]);
      any = true;
      break;
    case Kind::ball:
      best = closed_form::ball_infinitesimal(z, v);
      any = true;
      break;
    case Kind::polydisc:
      best = closed_form::polydisc_infinitesimal(z, v);
      any = true;
      break;
    case Kind::product: {
      int off = 0;
      for (const auto& f : d.factors) {
        bool sub = false;
        double val = lower_metric_dispatch(f, z.segment(off, f.dim), v.segment(off, f.dim),
                                           opts, &sub);
        if (sub) {
          best = std::max(best, val);
          any = true;
        }
        off += f.dim;
      }
      break;
    }
    case Kind::egg_bounded: {
      EggQuery q{&d, z, CPoint(), v, false};
      CVec vd = v / v.norm();
      best = maximize_family([&q](const RVec& p) { return -q.value(p); },
                             egg_starts(z, vd, rng, 3), 60);
      any = best > 0;
      break;
    }
    case Kind::egg_siegel: {
      // Cayley transport onto the bounded egg family.
      auto cay = domains::egg_cayley(d.egg_m);
      CPoint zb = cay.inv(z);
      CMat J = cay.jac_fwd(zb).inverse();  // Jacobian of inv at z
      Domain eb = domains::egg_bounded(d.egg_m);
      bool sub = false;
      best = lower_metric_dispatch(eb, zb, CVec(J * v), opts, &sub);
      any = sub;
      break;
    }
    default:
      break;
  }

  // Generic supporting half-plane route (exact support for convex domains,
  // grid-checked otherwise).
  {
    HalfPlaneQuery q{&d, z, CPoint(), v, false, {}};
    if (!d.convex) q.feas_grid = boundary_sample_grid(d, rng, 48);
    std::vector<RVec> starts;
    CVec nrm;
    try {
      nrm = domains::real_gradient(d, domains::nearest_boundary_point(d, z));
      starts.push_back(to_real(CVec(nrm / nrm.norm())));
    } catch (...) {
    }
    starts.push_back(to_real(CVec(v / v.norm())));
    for (int i = 0; i < 3; ++i) starts.push_back(rng.sphere(2 * d.dim));
    double hv = maximize_family([&q](const RVec& p) { return -q.value(p); }, starts, 50);
    if (hv > 0) {
      best = std::max(best, hv);
      any = true;
    }
  }
  if (found) *found = any;
  return best;
}

double lower_distance_dispatch(const Domain& d, const CPoint& z, const CPoint& w,
                               const DiscOptions& opts, bool* found) {
  using domains::Kind;
  double best = 0.0;
  bool any = false;
  Rng rng(mix_seed(opts.seed, "dist_lower", z, w));

  switch (d.kind) {
    case Kind::disc:
      best = closed_form::poincare_distance(z[0], w[0]);
      any = true;
      break;
    case Kind::ball:
      best = closed_form::ball_distance(z, w);
      any = true;
      break;
    case Kind::polydisc:
      best = closed_form::polydisc_distance(z, w);
      any = true;
      break;
    case Kind::product: {
      int off = 0;
      for (const auto& f : d.factors) {
        bool sub = false;
        double val = lower_distance_dispatch(f, z.segment(off, f.dim), w.segment(off, f.dim),
                                             opts, &sub);
        if (sub) {
          best = std::max(best, val);
          any = true;
        }
        off += f.dim;
      }
      break;
    }
    case Kind::egg_bounded: {
      EggQuery q{&d, z, w, CVec(), true};
      CVec dir = w - z;
      if (dir.norm() < 1e-300) return 0.0;
      best = maximize_family([&q](const RVec& p) { return -q.value(p); },
                             egg_starts(z, CVec(dir / dir.norm()), rng, 3), 60);
      any = best > 0;
      break;
    }
    case Kind::egg_siegel: {
      auto cay = domains::egg_cayley(d.egg_m);
      Domain eb = domains::egg_bounded(d.egg_m);
      bool sub = false;
      best = lower_distance_dispatch(eb, cay.inv(z), cay.inv(w), opts, &sub);
      any = sub;
      break;
    }
    default:
      break;
  }

  {
    HalfPlaneQuery q{&d, z, w, CVec(), true, {}};
    if (!d.convex) q.feas_grid = boundary_sample_grid(d, rng, 48);
    std::vector<RVec> starts;
    CVec dir = w - z;
    if (dir.norm() > 1e-300) starts.push_back(to_real(CVec(dir / dir.norm())));
    try {
      CVec nrm = domains::real_gradient(d, domains::nearest_boundary_point(d, z));
      starts.push_back(to_real(CVec(nrm / nrm.norm())));
    } catch (...) {
    }
    for (int i = 0; i < 3; ++i) starts.push_back(rng.sphere(2 * d.dim));
    double hv = maximize_family([&q](const RVec& p) { return -q.value(p); }, starts, 50);
    if (hv > 0) {
      best = std::max(best, hv);
      any = true;
    }
  }
  if (found) *found = any;
  return best;
}

}  // namespace

LowerResult caratheodory_infinitesimal_lower(const Domain& d, const CPoint& z,
                                             const CVec& v, const DiscOptions& opts) {
  if (!d.contains(z)) throw std::invalid_argument(d.name + ": base point not interior");
  if (v.norm() < 1e-300) throw std::invalid_argument("caratheodory_lower: v = 0");
  bool any = false;
  double val = lower_metric_dispatch(d, z, v, opts, &any);
  LowerResult r;
  r.metric = {val, MetricKind::caratheodory, BoundTag::lower};
  r.warning_no_functional = !any && val <= 0;
  return r;
}

Bracket certify_metric(const Domain& d, const CPoint& z, const CVec& v, double gap_tol,
                       const DiscOptions& opts) {
  if (!d.convex)
    throw std::invalid_argument("certify_metric: Lempert equality needs a convex domain");
  Bracket b;
  b.lower = caratheodory_infinitesimal_lower(d, z, v, opts).metric.value;
  b.upper = kobayashi_infinitesimal_upper(d, z, v, opts).metric.value;
  b.certified = b.lower > 0 && b.gap_rel() <= gap_tol;
  return b;
}

// ---------------------------------------------------------------------------
// Cheap affine-disc upper metric (path integrand).
// ---------------------------------------------------------------------------
double cheap_metric_upper(const Domain& d, const CPoint& z, const CVec& v,
                          int circle_samples) {
  double rho0 = d.rho(z);
  if (rho0 >= 0) return 1e9;
  double vn = v.norm();
  if (vn < 1e-300) return 0.0;
  CVec u = v / vn;
  double r = 1.0 - 1e-3;
  std::vector<cplx> ring(circle_samples);
  for (int i = 0; i < circle_samples; ++i) {
    double th = 2.0 * M_PI * i / circle_samples;
    ring[i] = r * cplx(std::cos(th), std::sin(th));
  }
  auto ok = [&](double s) {
    for (const auto& c : ring)
      if (d.rho(z + (s * c) * u) >= 0) return false;
    return true;
  };
  double s = std::abs(rho0) / (2.0 * std::abs(hinner(u, CVec(d.dz(z).conjugate()))) + 1e-12);
  s = std::clamp(s, 1e-9, 1e9);
  while (!ok(s)) {
    s *= 0.5;
    if (s < 1e-13) return 1e9;
  }
  while (ok(2.0 * s) && s < 1e12) s *= 2.0;
  double lo = s, hi = 2.0 * s;
  for (int i = 0; i < 40 && (hi - lo) > 1e-6 * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return vn / (lo * r);
}

// ---------------------------------------------------------------------------
// Integrated distance.
// ---------------------------------------------------------------------------
namespace {

struct PathState {
  std::vector<CPoint> pts;
  double length(const Domain& d) const {
    double L = 0;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
      CPoint mid = 0.5 * (pts[i] + pts[i + 1]);
      if (d.rho(mid) >= 0) return 1e9;
      L += cheap_metric_upper(d, mid, CVec(pts[i + 1] - pts[i]), 24);
    }
    return L;
  }
};

bool segment_inside(const Domain& d, const CPoint& a, const CPoint& b) {
  for (double u : {0.25, 0.5, 0.75})
    if (d.rho(a + u * (b - a)) >= 0) return false;
  return true;
}

PathState initial_path(const Domain& d, const CPoint& z, const CPoint& w, int segments) {
  PathState p;
  auto fill = [&](const std::function<CPoint(double)>& curve) {
    p.pts.clear();
    for (int i = 0; i <= segments; ++i) p.pts.push_back(curve(double(i) / segments));
  };
  fill([&](double u) { return CPoint(z + u * (w - z)); });
  bool ok = true;
  for (size_t i = 0; i + 1 < p.pts.size(); ++i)
    ok = ok && segment_inside(d, p.pts[i], p.pts[i + 1]);
  if (ok) return p;
  // detour through the anchor (quadratic Bezier)
  CPoint a = d.anchor;
  fill([&](double u) {
    return CPoint((1 - u) * (1 - u) * z + 2 * u * (1 - u) * a + u * u * w);
  });
  for (size_t i = 0; i + 1 < p.pts.size(); ++i)
    if (!segment_inside(d, p.pts[i], p.pts[i + 1]))
      throw std::runtime_error(d.name + ": no feasible initial path (straight and anchor detour both exit)");
  return p;
}

// Local FD descent on interior vertices; each vertex move touches only its
// two adjacent segments, so gradients are assembled segment-locally.
double optimize_path(const Domain& d, PathState& p, int iters) {
  int K = int(p.pts.size()) - 1;
  int n = d.dim;
  auto seg_len = [&](int i) {
    CPoint mid = 0.5 * (p.pts[i] + p.pts[i + 1]);
    if (d.rho(mid) >= 0) return 1e9;
    return cheap_metric_upper(d, mid, CVec(p.pts[i + 1] - p.pts[i]), 24);
  };
  std::vector<double> L(K);
  for (int i = 0; i < K; ++i) L[i] = seg_len(i);
  double total = 0;
  for (double l : L) total += l;

  double scale = 0;
  for (int i = 0; i < K; ++i) scale = std::max(scale, (p.pts[i + 1] - p.pts[i]).norm());
  double h = 1e-4 * std::max(scale, 1e-8);
  double step0 = 0.25 * scale;

  for (int it = 0; it < iters; ++it) {
    RVec g((K - 1) * 2 * n);
    for (int vi = 1; vi < K; ++vi) {
      for (int c = 0; c < 2 * n; ++c) {
        CPoint save = p.pts[vi];
        RVec xr = to_real(p.pts[vi]);
        xr[c] += h;
        p.pts[vi] = to_cplx(xr);
        double up = seg_len(vi - 1) + seg_len(vi);
        xr[c] -= 2 * h;
        p.pts[vi] = to_cplx(xr);
        double dn = seg_len(vi - 1) + seg_len(vi);
        p.pts[vi] = save;
        g[(vi - 1) * 2 * n + c] = (up - dn) / (2 * h);
      }
    }
    double gn = g.norm();
    if (gn < 1e-10) break;
    double step = step0;
    bool moved = false;
    for (int ls = 0; ls < 20; ++ls) {
      PathState cand = p;
      for (int vi = 1; vi < K; ++vi) {
        RVec xr = to_real(p.pts[vi]);
        for (int c = 0; c < 2 * n; ++c) xr[c] -= step * g[(vi - 1) * 2 * n + c] / gn;
        cand.pts[vi] = to_cplx(xr);
      }
      double cl = cand.length(d);
      if (cl < total - 1e-12) {
        p = cand;
        total = cl;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    step0 = std::max(step0 * 0.7, 1e-6 * scale);
  }
  return total;
}

std::optional<double> disc_distance(const Domain& d, const CPoint& z, const CPoint& w,
                                    const DiscOptions& opts) {
  DiscProblem prob;
  prob.init(d, z, opts);
  prob.chord_mode = true;
  prob.delta = w - z;
  prob.scale = std::max(std::min(std::abs(d.rho(z)), std::abs(d.rho(w))), 1e-14);
  Rng rng(mix_seed(opts.seed, "fk_dist", z, w));
  double jitter = 0.1 * prob.delta.norm();

  RVec warm = RVec::Zero(prob.dim());
  auto feasible = [&](double t) {
    prob.t = t;
    RVec x = warm;
    bool ok = prob.feasible_with_restarts(x, rng, jitter);
    if (ok) warm = x;
    return ok;
  };

  double t_hi = opts.r_eval * (1.0 - 1e-3);
  if (!feasible(t_hi)) return std::nullopt;
  double t_feas = t_hi, t_inf = 0.0;
  double probe = t_hi * 0.5;
  while (probe > 1e-9) {
    if (feasible(probe)) {
      t_feas = probe;
      probe *= 0.5;
    } else {
      t_inf = probe;
      break;
    }
  }
  if (t_inf == 0.0) return atanh_safe(t_feas / opts.r_eval);  // z ~ w
  double lo = t_inf, hi = t_feas;
  for (int i = 0; i < 60 && (hi - lo) > opts.bisect_rel_tol * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return atanh_safe(hi / opts.r_eval);
}

}  // namespace

DistanceResult kobayashi_distance(const Domain& d, const CPoint& z, const CPoint& w,
                                  const DiscOptions& opts) {
  if (!d.contains(z) || !d.contains(w))
    throw std::invalid_argument(d.name + ": distance endpoints must be interior");
  DistanceResult res;
  if ((z - w).norm() < 1e-300) {
    res.value = {0.0, MetricKind::kobayashi, BoundTag::exact};
    res.method = "disc";
    return res;
  }

  auto dd = disc_distance(d, z, w, opts);
  if (dd) res.disc_value = *dd;

  if (opts.path_segments >= 2) {
    try {
      PathState p = initial_path(d, z, w, opts.path_segments);
      double v1 = optimize_path(d, p, dd ? 25 : 60);
      // refinement check: split every segment, re-optimize briefly
      PathState fine;
      for (size_t i = 0; i + 1 < p.pts.size(); ++i) {
        fine.pts.push_back(p.pts[i]);
        fine.pts.push_back(0.5 * (p.pts[i] + p.pts[i + 1]));
      }
      fine.pts.push_back(p.pts.back());
      double v2 = optimize_path(d, fine, 10);
      res.path_value = std::min(v1, v2);
      res.path_refine_delta = v2 - v1;
    } catch (const std::exception&) {
      if (!dd) throw;
    }
  }

  if (res.disc_value < 0 && res.path_value < 0)
    throw std::runtime_error(d.name + ": both distance methods failed");
  if (res.disc_value >= 0 && (res.path_value < 0 || res.disc_value <= res.path_value)) {
    res.value = {res.disc_value, MetricKind::kobayashi, BoundTag::upper};
    res.method = "disc";
  } else {
    res.value = {res.path_value, MetricKind::kobayashi, BoundTag::upper};
    res.method = "path";
  }
  res.lower = distance_functional_lower(d, z, w, opts);
  return res;
}

double distance_functional_lower(const Domain& d, const CPoint& z, const CPoint& w,
                                 const DiscOptions& opts) {
  if ((z - w).norm() < 1e-300) return 0.0;
  bool any = false;
  return lower_distance_dispatch(d, z, w, opts, &any);
}

MetricValue inner_caratheodory_distance(const Domain& d, const CPoint& z, const CPoint& w,
                                        const DiscOptions& opts) {
  if (!d.contains(z) || !d.contains(w))
    throw std::invalid_argument(d.name + ": distance endpoints must be interior");
  if ((z - w).norm() < 1e-300) return {0.0, MetricKind::inner_caratheodory, BoundTag::exact};
  PathState p = initial_path(d, z, w, opts.path_segments);
  optimize_path(d, p, 40);
  double L = 0.0;
  for (size_t i = 0; i + 1 < p.pts.size(); ++i) {
    CPoint mid = 0.5 * (p.pts[i] + p.pts[i + 1]);
    CVec dv = p.pts[i + 1] - p.pts[i];
    L += caratheodory_infinitesimal_lower(d, mid, dv, opts).metric.value;
  }
  return {L, MetricKind::inner_caratheodory, BoundTag::lower};
}

// ---------------------------------------------------------------------------
// Kobayashi metric balls.
// ---------------------------------------------------------------------------
namespace {
double halton(int index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}
}  // namespace

BallCloud kobayashi_ball(const Domain& d, const CPoint& center, double R, int samples,
                         const Bbox& bbox, const DiscOptions& opts) {
  if (!d.contains(center)) throw std::invalid_argument(d.name + ": center not interior");
  if (R <= 0) throw std::invalid_argument("kobayashi_ball: R <= 0");
  static const int bases[] = {2, 3, 5, 7, 11, 13};
  int dim = int(bbox.lo.size());
  BallCloud cloud;
  cloud.radius = R;
  int idx = 1, kept = 0, tries = 0;
  while (kept < samples && tries < samples * 200) {
    RVec x(dim);
    for (int c = 0; c < dim; ++c)
      x[c] = bbox.lo[c] + (bbox.hi[c] - bbox.lo[c]) * halton(idx, bases[c]);
    ++idx;
    ++tries;
    CPoint p = to_cplx(x);
    if (!d.contains(p)) continue;
    double dist;
    if ((p - center).norm() < 1e-300)
      dist = 0.0;
    else {
      auto dr = kobayashi_distance(d, center, p, opts);
      dist = dr.value.value;
    }
    cloud.points.push_back(p);
    cloud.dist.push_back(dist);
    cloud.inside.push_back(dist <= R ? 1 : 0);
    ++kept;
  }
  if (cloud.points.empty()) throw std::runtime_error("kobayashi_ball: empty sample set");
  return cloud;
}

LemmaRReport lemma_r_check(const Domain& d, const Domain& sub, const CPoint& p,
                           const CPoint& q, double b, const Bbox& bbox, int samples,
                           const DiscOptions& opts) {
  if (!sub.contains(p) || !sub.contains(q))
    throw std::invalid_argument("lemma_r_check: points must lie in the subdomain");
  LemmaRReport rep;
  rep.d_dom = kobayashi_distance(d, p, q, opts).value.value;
  if (b <= rep.d_dom) throw std::invalid_argument("lemma_r_check: need b > d_D(p,q)");

  auto cloud = kobayashi_ball(d, q, b, samples, bbox, opts);
  rep.hypothesis_ok = true;
  for (size_t i = 0; i < cloud.points.size(); ++i)
    if (cloud.inside[i] && !sub.contains(cloud.points[i])) {
      rep.hypothesis_ok = false;
      break;
    }
  if (!rep.hypothesis_ok) return rep;  // no claim made

  rep.d_sub = kobayashi_distance(sub, p, q, opts).value.value;
  rep.bound = rep.d_dom / std::tanh(b - rep.d_dom);
  // optimizer slack on both sides of the comparison
  rep.satisfied = rep.d_sub <= rep.bound * (1.0 + 5e-3) + 1e-9;
  return rep;
}

}  // namespace invm::ext
