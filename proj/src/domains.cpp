#include "invm/domains.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace invm::domains {

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::disc: return "disc";
    case Kind::ball: return "ball";
    case Kind::polydisc: return "polydisc";
    case Kind::product: return "product";
    case Kind::egg_bounded: return "egg_bounded";
    case Kind::egg_siegel: return "egg_siegel";
    case Kind::perturbed_egg: return "perturbed_egg";
    case Kind::half_space_model: return "half_space_model";
    case Kind::custom: return "custom";
    case Kind::transformed: return "transformed";
  }
  return "?";
}

bool Domain::contains(const CPoint& z) const {
  if (z.size() != dim) throw std::invalid_argument(name + ": dimension mismatch");
  double v = rho(z);
  if (std::isnan(v)) throw std::runtime_error(name + ": rho evaluated to NaN");
  return v < 0.0;
}

// ---------------------------------------------------------------------------
// Holomorphic map plumbing.
// ---------------------------------------------------------------------------
HoloMap compose(const HoloMap& outer, const HoloMap& inner) {
  HoloMap m;
  m.name = outer.name + "*" + inner.name;
  m.fwd = [o = outer.fwd, i = inner.fwd](const CPoint& z) { return o(i(z)); };
  m.inv = [o = outer.inv, i = inner.inv](const CPoint& w) { return i(o(w)); };
  m.jac_fwd = [oj = outer.jac_fwd, ifwd = inner.fwd, ij = inner.jac_fwd](const CPoint& z) {
    return CMat(oj(ifwd(z)) * ij(z));
  };
  return m;
}

HoloMap identity_map(int n) {
  HoloMap m;
  m.name = "id";
  m.fwd = [](const CPoint& z) { return z; };
  m.inv = [](const CPoint& z) { return z; };
  m.jac_fwd = [n](const CPoint&) { return CMat(CMat::Identity(n, n)); };
  return m;
}

HoloMap affine_map(std::string name, const CMat& A, const CPoint& b) {
  HoloMap m;
  m.name = std::move(name);
  CMat Ainv = A.inverse();
  m.fwd = [A, b](const CPoint& z) { return CPoint(A * z + b); };
  m.inv = [Ainv, b](const CPoint& w) { return CPoint(Ainv * (w - b)); };
  m.jac_fwd = [A](const CPoint&) { return A; };
  return m;
}

// ---------------------------------------------------------------------------
// Catalog.
// ---------------------------------------------------------------------------
CVec fd_holomorphic_gradient(const std::function<double(const CPoint&)>& rho,
                             const CPoint& z, double h) {
  // d/dz = (d/dx - i d/dy)/2, central differences per real coordinate.
  CVec g(z.size());
  CPoint w = z;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    w[j] = z[j] + h;
    double fxp = rho(w);
    w[j] = z[j] - h;
    double fxm = rho(w);
    w[j] = z[j] + cplx(0, h);
    double fyp = rho(w);
    w[j] = z[j] - cplx(0, h);
    double fym = rho(w);
    w[j] = z[j];
    double dx = (fxp - fxm) / (2 * h), dy = (fyp - fym) / (2 * h);
    g[j] = cplx(dx, -dy) * 0.5;
  }
  return g;
}

static double pert_value(const std::vector<PertTerm>& terms, cplx z1) {
  double s = 0.0;
  for (const auto& t : terms)
    s += t.coef * (std::pow(z1, t.a) * std::pow(std::conj(z1), t.b)).real();
  return s;
}

static cplx pert_dz1(const std::vector<PertTerm>& terms, cplx z1) {
  // d/dz1 of coef*Re(z1^a zbar^b) = coef*(a z1^{a-1} zbar^b + b z1^{b-1} zbar^a)/2
  cplx s = 0.0;
  cplx zb = std::conj(z1);
  for (const auto& t : terms) {
    cplx u = t.a > 0 ? double(t.a) * std::pow(z1, t.a - 1) * std::pow(zb, t.b) : cplx(0);
    cplx v = t.b > 0 ? double(t.b) * std::pow(z1, t.b - 1) * std::pow(zb, t.a) : cplx(0);
    s += t.coef * 0.5 * (u + v);
  }
  return s;
}

Domain disc() {
  Domain d;
  d.name = "disc";
  d.kind = Kind::disc;
  d.dim = 1;
  d.convex = d.bounded = true;
  d.rho = [](const CPoint& z) { return std::norm(z[0]) - 1.0; };
  d.dz = [](const CPoint& z) {
    CVec g(1);
    g[0] = std::conj(z[0]);
    return g;
  };
  d.bdist_closed = [](const CPoint& z) { return 1.0 - std::abs(z[0]); };
  d.bproj_closed = [](const CPoint& z) {
    CPoint p(1);
    double a = std::abs(z[0]);
    p[0] = a < 1e-14 ? cplx(1, 0) : z[0] / a;
    return p;
  };
  d.anchor = CPoint::Zero(1);
  return d;
}

Domain ball(int n) {
  Domain d;
  d.name = "ball(" + std::to_string(n) + ")";
  d.kind = Kind::ball;
  d.dim = n;
  d.convex = d.bounded = true;
  d.rho = [](const CPoint& z) { return z.squaredNorm() - 1.0; };
  d.dz = [](const CPoint& z) { return CVec(z.conjugate()); };
  d.bdist_closed = [](const CPoint& z) { return 1.0 - z.norm(); };
  d.bproj_closed = [](const CPoint& z) {
    double a = z.norm();
    if (a < 1e-14) {
      CPoint p = CPoint::Zero(z.size());
      p[0] = 1.0;
      return p;
    }
    return CPoint(z / a);
  };
  d.anchor = CPoint::Zero(n);
  return d;
}

Domain polydisc(int n) {
  Domain d;
  d.name = "polydisc(" + std::to_string(n) + ")";
  d.kind = Kind::polydisc;
  d.dim = n;
  d.convex = d.bounded = true;
  d.rho = [](const CPoint& z) {
    double m = -2.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) m = std::max(m, std::norm(z[j]) - 1.0);
    return m;
  };
  d.dz = [](const CPoint& z) {
    // gradient of the active factor (boundary is non-smooth on the corner set)
    CVec g = CVec::Zero(z.size());
    Eigen::Index jmax = 0;
    for (Eigen::Index j = 1; j < z.size(); ++j)
      if (std::norm(z[j]) > std::norm(z[jmax])) jmax = j;
    g[jmax] = std::conj(z[jmax]);
    return g;
  };
  d.bdist_closed = [](const CPoint& z) {
    double m = 1e300;
    for (Eigen::Index j = 0; j < z.size(); ++j) m = std::min(m, 1.0 - std::abs(z[j]));
    return m;
  };
  d.bproj_closed = [](const CPoint& z) {
    CPoint p = z;
    Eigen::Index jmax = 0;
    for (Eigen::Index j = 1; j < z.size(); ++j)
      if (std::abs(z[j]) > std::abs(z[jmax])) jmax = j;
    double a = std::abs(z[jmax]);
    p[jmax] = a < 1e-14 ? cplx(1, 0) : z[jmax] / a;
    return p;
  };
  d.anchor = CPoint::Zero(n);
  return d;
}

Domain product(const Domain& a, const Domain& b) {
  Domain d;
  d.name = "product(" + a.name + "," + b.name + ")";
  d.kind = Kind::product;
  d.dim = a.dim + b.dim;
  d.convex = a.convex && b.convex;
  d.bounded = a.bounded && b.bounded;
  int na = a.dim;
  auto ra = a.rho, rb = b.rho;
  d.rho = [ra, rb, na](const CPoint& z) {
    return std::max(ra(z.head(na)), rb(z.tail(z.size() - na)));
  };
  auto dza = a.dz, dzb = b.dz;
  d.dz = [ra, rb, dza, dzb, na](const CPoint& z) {
    CPoint za = z.head(na), zb = z.tail(z.size() - na);
    CVec g = CVec::Zero(z.size());
    if (ra(za) >= rb(zb))
      g.head(na) = dza(za);
    else
      g.tail(z.size() - na) = dzb(zb);
    return g;
  };
  if (a.bdist_closed && b.bdist_closed) {
    auto bda = a.bdist_closed, bdb = b.bdist_closed;
    d.bdist_closed = [bda, bdb, na](const CPoint& z) {
      return std::min(bda(z.head(na)), bdb(z.tail(z.size() - na)));
    };
  }
  d.anchor = CPoint::Zero(d.dim);
  d.anchor.head(na) = a.anchor;
  d.anchor.tail(b.dim) = b.anchor;
  d.factors = {a, b};
  return d;
}

Domain egg_bounded(int m) {
  Domain d;
  d.name = "egg_bounded(" + std::to_string(m) + ")";
  d.kind = Kind::egg_bounded;
  d.dim = 2;
  d.convex = true;  // |z1|^{2m} and |z2|^2 are convex
  d.bounded = true;
  d.egg_m = m;
  d.rho = [m](const CPoint& z) {
    return std::pow(std::norm(z[0]), m) + std::norm(z[1]) - 1.0;
  };
  d.dz = [m](const CPoint& z) {
    CVec g(2);
    double r2 = std::norm(z[0]);
    g[0] = double(m) * (m >= 2 ? std::pow(r2, m - 1) : 1.0) * std::conj(z[0]);
    g[1] = std::conj(z[1]);
    return g;
  };
  d.anchor = CPoint::Zero(2);
  return d;
}

Domain egg_siegel(int m) {
  Domain d;
  d.name = "egg_siegel(" + std::to_string(m) + ")";
  d.kind = Kind::egg_siegel;
  d.dim = 2;
  d.convex = true;
  d.bounded = false;
  d.egg_m = m;
  d.rho = [m](const CPoint& z) {
    return 2.0 * z[1].real() + std::pow(std::norm(z[0]), m);
  };
  d.dz = [m](const CPoint& z) {
    CVec g(2);
    double r2 = std::norm(z[0]);
    g[0] = double(m) * (m >= 2 ? std::pow(r2, m - 1) : 1.0) * std::conj(z[0]);
    g[1] = 1.0;
    return g;
  };
  d.anchor = cpoint2(0.0, -1.0);
  return d;
}

Domain perturbed_egg(int m, std::vector<PertTerm> terms) {
  Domain d = egg_siegel(m);
  std::ostringstream nm;
  nm << "perturbed_egg(" << m;
  for (auto& t : terms) nm << ",[" << t.a << "," << t.b << "," << t.coef << "]";
  nm << ")";
  d.name = nm.str();
  d.kind = Kind::perturbed_egg;
  d.convex = false;
  d.pert = terms;
  d.rho = [m, terms](const CPoint& z) {
    return 2.0 * z[1].real() + std::pow(std::norm(z[0]), m) + pert_value(terms, z[0]);
  };
  d.dz = [m, terms](const CPoint& z) {
    CVec g(2);
    double r2 = std::norm(z[0]);
    g[0] = double(m) * (m >= 2 ? std::pow(r2, m - 1) : 1.0) * std::conj(z[0]) +
           pert_dz1(terms, z[0]);
    g[1] = 1.0;
    return g;
  };
  return d;
}

Domain half_space_model(double R) {
  Domain d;
  d.name = "half_space_model(" + fmt_g17(R) + ")";
  d.kind = Kind::half_space_model;
  d.dim = 2;
  d.convex = true;
  d.bounded = false;
  d.halfspace_R = R;
  d.rho = [R](const CPoint& z) { return 2.0 * R * z[1].real() + std::norm(z[0]); };
  d.dz = [R](const CPoint& z) {
    CVec g(2);
    g[0] = std::conj(z[0]);
    g[1] = R;
    return g;
  };
  d.anchor = cpoint2(0.0, -1.0);
  return d;
}

Domain custom(std::string name, int n, std::function<double(const CPoint&)> rho,
              CPoint anchor, bool convex, bool bounded) {
  Domain d;
  d.name = std::move(name);
  d.kind = Kind::custom;
  d.dim = n;
  d.convex = convex;
  d.bounded = bounded;
  d.boundary_tol = 1e-7;
  d.rho = rho;
  d.dz = [rho](const CPoint& z) { return fd_holomorphic_gradient(rho, z); };
  d.anchor = std::move(anchor);
  return d;
}

Domain transformed(const Domain& base, const HoloMap& map, double rho_scale,
                   std::string name, bool convex, bool bounded) {
  Domain d;
  d.name = std::move(name);
  d.kind = Kind::transformed;
  d.dim = base.dim;
  d.convex = convex;
  d.bounded = bounded;
  d.boundary_tol = 1e-7;
  d.egg_m = base.egg_m;
  auto rho0 = base.rho;
  auto dz0 = base.dz;
  auto inv = map.inv;
  auto jf = map.jac_fwd;
  d.rho = [rho0, inv, rho_scale](const CPoint& w) { return rho0(inv(w)) / rho_scale; };
  d.dz = [dz0, inv, jf, rho_scale](const CPoint& w) {
    // d(rho o G)/dw = J_G^T dz(G(w)) with J_G = J_fwd(G(w))^{-1}
    CPoint z = inv(w);
    CMat Jg = jf(z).inverse();
    return CVec(Jg.transpose() * dz0(z) / rho_scale);
  };
  d.anchor = map.fwd(base.anchor);
  return d;
}

HoloMap egg_cayley(int m) {
  HoloMap map;
  map.name = "egg_cayley(" + std::to_string(m) + ")";
  double root = std::pow(2.0, 1.0 / (2.0 * m));
  auto fwd = [m, root](const CPoint& z) {
    cplx one_pz = 1.0 + z[1];
    if (one_pz.real() <= 1e-9)
      throw std::runtime_error("egg_cayley: too close to the branch cut Re(1+z2)=0");
    CPoint w(2);
    w[1] = (z[1] - 1.0) / one_pz;
    w[0] = root * z[0] / std::pow(one_pz, 1.0 / m);
    return w;
  };
  auto inv = [m, root](const CPoint& w) {
    cplx one_mw = 1.0 - w[1];
    if (one_mw.real() <= 1e-9)
      throw std::runtime_error("egg_cayley: inverse too close to the branch cut");
    CPoint z(2);
    z[1] = (1.0 + w[1]) / one_mw;
    // z1 = w1 (1+z2)^{1/m} / 2^{1/2m} with 1+z2 = 2/(1-w2)
    z[0] = w[0] * std::pow(2.0 / one_mw, 1.0 / m) / root;
    return z;
  };
  map.fwd = fwd;
  map.inv = inv;
  map.jac_fwd = [m, root](const CPoint& z) {
    cplx one_pz = 1.0 + z[1];
    CMat J = CMat::Zero(2, 2);
    J(1, 1) = 2.0 / (one_pz * one_pz);
    J(0, 0) = root / std::pow(one_pz, 1.0 / m);
    J(0, 1) = -root * z[0] / (double(m) * std::pow(one_pz, 1.0 / m + 1.0));
    return J;
  };
  return map;
}

// ---------------------------------------------------------------------------
// Boundary projection.
// ---------------------------------------------------------------------------
CVec real_gradient(const Domain& d, const CPoint& z) { return 2.0 * d.dz(z).conjugate(); }

namespace {

// Pull a point onto {rho = 0} by damped Newton steps along the real gradient.
bool newton_to_surface(const Domain& d, CPoint& w, double tol, int iters = 60) {
  for (int i = 0; i < iters; ++i) {
    double r = d.rho(w);
    if (std::abs(r) <= tol) return true;
    CVec g = real_gradient(d, w);
    double g2 = g.squaredNorm();
    if (g2 < 1e-30) return false;
    w -= (r / g2) * g;
  }
  return std::abs(d.rho(w)) <= tol * 10;
}

struct ProjResult {
  CPoint w;
  double dist;
};

// Projected-gradient descent for min |w-z|^2 s.t. rho(w)=0 from a given start.
ProjResult project_from(const Domain& d, const CPoint& z, CPoint w0, double tol,
                        int max_iter) {
  CPoint w = w0;
  if (!newton_to_surface(d, w, tol))
    throw std::runtime_error(d.name + ": boundary projection failed to reach rho=0 near " +
                             fmt_g17(d.rho(w)));
  double best = (w - z).norm();
  for (int it = 0; it < max_iter; ++it) {
    CVec g = real_gradient(d, w);
    double g2 = g.squaredNorm();
    CVec r = w - z;
    CVec t = r - (rinner(r, g) / g2) * g;  // tangential part of the residual
    double tn = t.norm();
    if (tn <= tol * (1.0 + best)) break;
    double step = 1.0;
    for (int ls = 0; ls < 30; ++ls) {
      CPoint cand = w - step * t;
      if (newton_to_surface(d, cand, tol) && (cand - z).norm() < best - 0.25 * step * tn * tn) {
        w = cand;
        best = (w - z).norm();
        break;
      }
      step *= 0.5;
      if (ls == 29) it = max_iter;  // no progress possible
    }
  }
  return {w, (w - z).norm()};
}

}  // namespace

CPoint nearest_boundary_point(const Domain& d, const CPoint& z) {
  if (!d.contains(z)) throw std::invalid_argument(d.name + ": point not interior");
  if (d.bproj_closed) return d.bproj_closed(z);

  double tol = d.boundary_tol;
  CVec g = real_gradient(d, z);
  double g2 = g.squaredNorm();
  if (g2 < 1e-30) throw std::runtime_error(d.name + ": vanishing gradient at query point");
  CPoint w0 = z - (d.rho(z) / g2) * g;

  ProjResult main = project_from(d, z, w0, tol, 200);

  // Ambiguity scan: restart from jittered seeds; a distinct minimizer at the
  // same distance means the projection is not unique here.
  Rng rng(0x9d2c5680u ^ std::uint64_t(z.size()));
  double jitter = 0.25 * main.dist;
  for (int k = 0; k < 3; ++k) {
    CPoint w1 = w0;
    for (Eigen::Index j = 0; j < w1.size(); ++j)
      w1[j] += jitter * cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
    ProjResult alt;
    try {
      alt = project_from(d, z, w1, tol, 200);
    } catch (const std::exception&) {
      continue;
    }
    if (alt.dist < main.dist - 1e3 * tol) main = alt;
    else if (std::abs(alt.dist - main.dist) <= 1e3 * tol &&
             (alt.w - main.w).norm() > 1e5 * tol * (1.0 + main.dist)) {
      std::ostringstream msg;
      msg << d.name << ": ambiguous boundary projection, candidates at distance "
          << main.dist << " separated by " << (alt.w - main.w).norm();
      throw std::runtime_error(msg.str());
    }
  }
  if (std::abs(d.rho(main.w)) > tol * 10)
    throw std::runtime_error(d.name + ": projection residual above tolerance");
  return main.w;
}

double boundary_distance(const Domain& d, const CPoint& z) {
  if (!d.contains(z)) throw std::invalid_argument(d.name + ": point not interior");
  if (d.bdist_closed) return d.bdist_closed(z);
  return (nearest_boundary_point(d, z) - z).norm();
}

std::pair<CVec, CVec> tangential_normal_split(const Domain& d, const CPoint& z,
                                              const CVec& v) {
  CPoint p = nearest_boundary_point(d, z);
  CVec nu = real_gradient(d, p);  // spans the complex normal line at pi(z)
  double n2 = nu.squaredNorm();
  if (n2 < 1e-30) throw std::runtime_error(d.name + ": degenerate normal at projection");
  CVec vN = (hinner(v, nu) / n2) * nu;  // complex-orthogonal projection
  CVec vT = v - vN;
  return {vT, vN};
}

}  // namespace invm::domains
