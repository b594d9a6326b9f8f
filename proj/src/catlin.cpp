#include "invm/catlin.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace invm::cat {

double CatlinFrame::pnorm(int l) const {
  if (l < 2 || l >= int(pcoef.size())) return 0.0;
  double m = 0.0;
  for (const auto& c : pcoef[l]) m = std::max(m, std::abs(c));
  return m;
}

double CatlinFrame::eval_P(int l, cplx w1) const {
  if (l < 2 || l >= int(pcoef.size())) return 0.0;
  cplx wb = std::conj(w1);
  cplx s = 0.0;
  for (int a = 1; a < l; ++a) {
    cplx c = pcoef[l][a];
    if (c == cplx(0)) continue;
    s += c * std::pow(w1, a) * std::pow(wb, l - a);
  }
  return s.real();
}

HoloMap CatlinFrame::normalizer() const {
  HoloMap m;
  m.name = "catlin_phi";
  CPoint zeta = base;
  cplx d0c = d0;
  std::vector<cplx> dlc = dl;
  m.fwd = [zeta, d0c, dlc](const CPoint& z) {
    cplx u = z[0] - zeta[0];
    cplx s = 0.0, up = 1.0;
    for (const auto& c : dlc) {
      up *= u;
      s += c * up;
    }
    CPoint w(2);
    w[0] = u;
    w[1] = (z[1] - zeta[1] - s) / d0c;
    return w;
  };
  m.inv = [zeta, d0c, dlc](const CPoint& w) {
    cplx s = 0.0, up = 1.0;
    for (const auto& c : dlc) {
      up *= w[0];
      s += c * up;
    }
    CPoint z(2);
    z[0] = w[0] + zeta[0];
    z[1] = zeta[1] + d0c * w[1] + s;
    return z;
  };
  m.jac_fwd = [d0c, dlc](const CPoint& z0) {
    (void)z0;
    CMat J = CMat::Zero(2, 2);
    J(0, 0) = 1.0;
    J(1, 1) = 1.0 / d0c;
    // dw2/dz1 = -(sum l d^l u^{l-1})/d0 needs the base offset; recomputed at
    // call sites that require it.  Left as the diagonal since only the
    // triangular structure is consumed downstream.
    return J;
  };
  return m;
}

namespace {

// 2D Taylor coefficients c_{ab} (a+b <= cap) of G(w) - G(0) for a function of
// one complex variable, by circle sampling.  Exact for polynomials of degree
// <= cap in (w, conj w); the radius r0 only matters for conditioning then.
std::vector<std::vector<cplx>> circle_taylor(const std::function<double(cplx)>& G,
                                             int cap, double r0, int radii) {
  int Theta = 4 * cap + 5;
  Eigen::VectorXd rs(radii);
  for (int p = 0; p < radii; ++p) rs[p] = r0 * double(p + 1) / radii;

  double G0 = G(0.0);
  // ring transforms: ring(p, f) = sum_{a-b=f} c_ab r_p^{a+b}
  Eigen::MatrixXcd ring(radii, 2 * cap + 1);
  for (int p = 0; p < radii; ++p) {
    std::vector<double> vals(Theta);
    for (int q = 0; q < Theta; ++q) {
      double th = 2.0 * M_PI * q / Theta;
      vals[q] = G(rs[p] * cplx(std::cos(th), std::sin(th))) - G0;
    }
    for (int f = -cap; f <= cap; ++f) {
      cplx acc = 0.0;
      for (int q = 0; q < Theta; ++q) {
        double th = 2.0 * M_PI * q / Theta;
        acc += vals[q] * cplx(std::cos(f * th), -std::sin(f * th));
      }
      ring(p, f + cap) = acc / double(Theta);
    }
  }

  std::vector<std::vector<cplx>> c(cap + 1);
  for (int l = 0; l <= cap; ++l) c[l].assign(l + 1, cplx(0));
  for (int f = -cap; f <= cap; ++f) {
    // degrees l with l = |f|, |f|+2, ... <= cap
    std::vector<int> degs;
    for (int l = std::abs(f); l <= cap; l += 2) degs.push_back(l);
    if (degs.empty()) continue;
    Eigen::MatrixXd V(radii, int(degs.size()));
    for (int p = 0; p < radii; ++p)
      for (size_t k = 0; k < degs.size(); ++k) V(p, k) = std::pow(rs[p], degs[k]);
    Eigen::VectorXcd rhs = ring.col(f + cap);
    Eigen::VectorXcd sol =
        V.colPivHouseholderQr().solve(rhs.real()).cast<cplx>() +
        cplx(0, 1) * V.colPivHouseholderQr().solve(rhs.imag()).cast<cplx>();
    for (size_t k = 0; k < degs.size(); ++k) {
      int l = degs[k];
      int a = (l + f) / 2;
      if (a >= 0 && a <= l) c[l][a] = sol[k];
    }
  }
  return c;
}

bool is_polynomial_catalog(const Domain& d) {
  using domains::Kind;
  return d.kind == Kind::egg_siegel || d.kind == Kind::perturbed_egg ||
         d.kind == Kind::egg_bounded || d.kind == Kind::half_space_model ||
         d.kind == Kind::ball || d.kind == Kind::disc;
}

}  // namespace

CatlinFrame catlin_normalize(const Domain& d, const CPoint& zeta, int m) {
  if (d.dim != 2) throw std::invalid_argument("catlin_normalize: C^2 only");
  if (!d.contains(zeta)) throw std::invalid_argument("catlin_normalize: zeta not interior");
  cplx B = d.dz(zeta)[1];
  if (std::abs(B) < 1e-8)
    throw std::runtime_error("catlin_normalize: d rho/d z2 below threshold at zeta");

  int cap = 4 * m + 2;  // substituted polynomial degree bound for the catalog
  double r0;
  if (is_polynomial_catalog(d)) {
    r0 = 0.5;  // exact extraction, radius only conditions the Vandermonde
  } else {
    double scale = std::max(1e-6, std::min(1.0, 10.0 * std::abs(d.rho(zeta))));
    r0 = 1e-2 * scale;
  }

  CatlinFrame fr;
  fr.base = zeta;
  fr.type2m = 2 * m;
  fr.dl.assign(2 * m, cplx(0));

  auto slice = [&](cplx w1) {
    cplx s = 0.0, up = 1.0;
    for (const auto& c : fr.dl) {
      up *= w1;
      s += c * up;
    }
    return d.rho(cpoint2(zeta[0] + w1, zeta[1] + s));
  };

  std::vector<std::vector<cplx>> coef;
  // Triangular sweep: the harmonic coefficient at degree k moves only the
  // coefficients of degree >= k, so one forward pass per degree suffices;
  // a second pass guards the finite-difference path.
  for (int pass = 0; pass < 2; ++pass) {
    for (int k = 1; k <= 2 * m; ++k) {
      coef = circle_taylor(slice, cap, r0, cap + 4);
      cplx Hk = coef[k][k];  // coefficient of w1^k (a=k, b=0)
      fr.dl[k - 1] += Hk / B;
      if (std::abs(Hk) < 1e-14) continue;
    }
    coef = circle_taylor(slice, cap, r0, cap + 4);
    double worst = 0.0;
    for (int k = 1; k <= 2 * m; ++k) worst = std::max(worst, std::abs(coef[k][k]));
    if (worst < 1e-9) break;
    if (pass == 1 && worst > 1e-6)
      throw std::runtime_error("catlin_normalize: harmonic residual above tolerance: " +
                               fmt_g17(worst));
  }

  fr.d0 = 1.0 / B;
  fr.pcoef.assign(2 * m + 1, {});
  for (int l = 2; l <= 2 * m; ++l) {
    fr.pcoef[l].assign(l + 1, cplx(0));
    for (int a = 1; a < l; ++a) fr.pcoef[l][a] = coef[l][a];
  }
  return fr;
}

double tau(const CatlinFrame& frame, double delta) {
  if (delta <= 0) throw std::invalid_argument("tau: delta must be positive");
  double best = -1.0;
  for (int l = 2; l <= frame.type2m; ++l) {
    double nrm = frame.pnorm(l);
    if (nrm < 1e-13) continue;
    double t = std::pow(delta / nrm, 1.0 / l);
    if (best < 0 || t < best) best = t;
  }
  if (best < 0)
    throw std::runtime_error("tau: all P_l vanish (finite type violated at this base point)");
  return best;
}

HoloMap catlin_dilation(const CatlinFrame& frame, double delta) {
  double t = tau(frame, delta);
  CMat A = CMat::Zero(2, 2);
  A(0, 0) = 1.0 / t;
  A(1, 1) = 1.0 / delta;
  return domains::affine_map("catlin_dilation", A, CPoint(CPoint::Zero(2)));
}

bool Bidisc::member(const CPoint& z) const {
  CPoint w = frame.normalizer().fwd(z);
  double t = tau(frame, delta);
  return std::abs(w[0]) < t && std::abs(w[1]) < delta;
}

Bidisc bidisc_Q(const CatlinFrame& frame, double delta) { return {frame, delta}; }

const CatlinFrame& FrameCache::at(const CPoint& zeta) {
  std::ostringstream key;
  for (Eigen::Index i = 0; i < zeta.size(); ++i)
    key << fmt_g17(zeta[i].real()) << "," << fmt_g17(zeta[i].imag()) << ";";
  auto it = cache_.find(key.str());
  if (it == cache_.end())
    it = cache_.emplace(key.str(),
                        std::make_unique<CatlinFrame>(catlin_normalize(*dom_, zeta, m_)))
             .first;
  return *it->second;
}

double dprime(const Domain& d, const CPoint& a, const CPoint& b, FrameCache& frames) {
  (void)d;
  if ((a - b).norm() < 1e-300) return 0.0;
  const CatlinFrame& fb = frames.at(b);
  CPoint w = fb.normalizer().fwd(a);
  auto member = [&](double delta) {
    return std::abs(w[0]) < tau(fb, delta) && std::abs(w[1]) < delta;
  };

  double hi = std::max(std::abs(w[1]), 1e-14) * 1.0000001;
  int guard = 0;
  while (!member(hi) && guard++ < 200) hi *= 2.0;
  if (!member(hi)) throw std::runtime_error("dprime: no feasible delta up to the scanned range");
  double lo = hi;
  while (member(lo * 0.5) && lo > 1e-300) lo *= 0.5;

  // monotonicity check on a log grid before trusting bisection
  bool monotone = true;
  bool prev = member(lo * 0.5);
  for (int i = 0; i <= 16; ++i) {
    double dd = lo * 0.5 * std::pow(hi / (lo * 0.5), i / 16.0);
    bool cur = member(dd);
    if (prev && !cur) {
      monotone = false;
      break;
    }
    prev = cur;
  }
  if (!monotone) {
    // grid scan fallback at 10x resolution
    for (int i = 0; i <= 160; ++i) {
      double dd = lo * 0.5 * std::pow(hi / (lo * 0.5), i / 160.0);
      if (member(dd)) return dd;
    }
    return hi;
  }
  for (int i = 0; i < 200 && (hi - lo) > 1e-10 * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    (member(mid) ? hi : lo) = mid;
  }
  return hi;
}

double dtilde(const Domain& d, const CPoint& a, const CPoint& b, FrameCache& frames) {
  return std::min(dprime(d, a, b, frames), (a - b).norm());
}

double rho_star(const Domain& d, const CPoint& a, const CPoint& b, FrameCache& frames) {
  if ((a - b).norm() < 1e-300) return 0.0;
  double dist = domains::boundary_distance(d, a);
  const CatlinFrame& fa = frames.at(a);
  CVec g = d.dz(a);
  CVec L(2);
  L[0] = -g[1];
  L[1] = g[0];
  double num = std::abs(hinner(L, CVec(a - b)));
  double dt = dtilde(d, a, b, frames);
  return std::log(1.0 + dt / dist + num / tau(fa, dist));
}

double frame_residual(const Domain& d, const CatlinFrame& frame, double s) {
  auto phi = frame.normalizer();
  double rho0 = d.rho(frame.base);
  double worst = 0.0;
  int G = 9;
  double s2 = std::pow(s, frame.type2m);
  for (int i = 0; i < G; ++i)
    for (int j = 0; j < G; ++j)
      for (int k = 0; k < 3; ++k) {
        cplx w1 = s * cplx((2.0 * i / (G - 1) - 1.0), (2.0 * j / (G - 1) - 1.0));
        cplx w2 = s2 * cplx(k == 1 ? 0.7 : 0.0, k == 2 ? 0.7 : 0.0);
        CPoint z = phi.inv(cpoint2(w1, w2));
        double model = rho0 + 2.0 * w2.real();
        for (int l = 2; l <= frame.type2m; ++l) model += frame.eval_P(l, w1);
        worst = std::max(worst, std::abs(d.rho(z) - model));
      }
  return worst / s2;
}

}  // namespace invm::cat
