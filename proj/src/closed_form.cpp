#include "invm/closed_form.hpp"

#include <cmath>
#include <stdexcept>

namespace invm::closed_form {

const char* kind_name(MetricKind k) {
  switch (k) {
    case MetricKind::kobayashi: return "kobayashi";
    case MetricKind::caratheodory: return "caratheodory";
    case MetricKind::inner_caratheodory: return "inner_caratheodory";
  }
  return "?";
}

const char* bound_name(BoundTag b) {
  switch (b) {
    case BoundTag::exact: return "exact";
    case BoundTag::upper: return "upper";
    case BoundTag::lower: return "lower";
  }
  return "?";
}

double poincare_metric(cplx z, cplx v) {
  double r2 = std::norm(z);
  if (r2 >= 1.0) throw std::invalid_argument("poincare_metric: |z| >= 1");
  return CURV_NORM * std::abs(v) / (1.0 - r2);
}

double poincare_distance(cplx z, cplx w) {
  if (std::norm(z) >= 1.0 || std::norm(w) >= 1.0)
    throw std::invalid_argument("poincare_distance: argument outside the unit disc");
  cplx m = (z - w) / (1.0 - std::conj(z) * w);
  return CURV_NORM * std::atanh(std::abs(m));
}

// ---------------------------------------------------------------------------
// Ball.
// ---------------------------------------------------------------------------
double ball_infinitesimal(const CPoint& z, const CVec& v) {
  double z2 = z.squaredNorm();
  if (z2 >= 1.0) throw std::invalid_argument("ball_infinitesimal: |z| >= 1");
  double s = 1.0 - z2;
  double q = (v.squaredNorm() * s + std::norm(hinner(v, z))) / (s * s);
  return CURV_NORM * std::sqrt(q);
}

domains::HoloMap ball_automorphism(const CPoint& a) {
  double a2 = a.squaredNorm();
  if (a2 >= 1.0) throw std::invalid_argument("ball_automorphism: |a| >= 1");
  domains::HoloMap m;
  m.name = "ball_aut";
  if (a2 < 1e-30) return domains::identity_map(int(a.size()));
  double s = std::sqrt(1.0 - a2);
  CPoint ac = a;
  auto phi = [ac, a2, s](const CPoint& z) {
    cplx za = hinner(z, ac);  // <z,a>
    CPoint Pz = (za / a2) * ac;
    CPoint Qz = z - Pz;
    return CPoint((ac - Pz - s * Qz) / (1.0 - za));
  };
  m.fwd = phi;
  m.inv = phi;  // involution
  m.jac_fwd = [phi](const CPoint& z) { return holomorphic_jacobian_fd(phi, z); };
  return m;
}

double ball_distance(const CPoint& z, const CPoint& w) {
  if (z.squaredNorm() >= 1.0 || w.squaredNorm() >= 1.0)
    throw std::invalid_argument("ball_distance: point outside the ball");
  if ((z - w).norm() < 1e-300) return 0.0;
  if (z.squaredNorm() < 1e-30) return CURV_NORM * std::atanh(w.norm());
  auto aut = ball_automorphism(z);
  return CURV_NORM * std::atanh(aut.fwd(w).norm());
}

// ---------------------------------------------------------------------------
// Polydisc and products: the max formulas.
// ---------------------------------------------------------------------------
double polydisc_infinitesimal(const CPoint& z, const CVec& v) {
  double m = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j)
    m = std::max(m, poincare_metric(z[j], v[j]));
  return m;
}

double polydisc_distance(const CPoint& z, const CPoint& w) {
  double m = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j)
    m = std::max(m, poincare_distance(z[j], w[j]));
  return m;
}

double product_distance(const std::vector<std::pair<int, DistanceOracle>>& factors,
                        const CPoint& z, const CPoint& w) {
  int off = 0;
  double m = 0.0;
  for (const auto& [n, oracle] : factors) {
    m = std::max(m, oracle(z.segment(off, n), w.segment(off, n)));
    off += n;
  }
  if (off != z.size())
    throw std::invalid_argument("product_distance: factor dimensions do not sum to n");
  return m;
}

// ---------------------------------------------------------------------------
// Ball curvature by finite differences.
// ---------------------------------------------------------------------------
RMat ball_metric_matrix(const CPoint& z) {
  int d = int(2 * z.size());
  auto Q = [&z](const CVec& v) {
    double q = ball_infinitesimal(z, v);
    return q * q;
  };
  RMat g(d, d);
  std::vector<double> qe(d);
  for (int i = 0; i < d; ++i) {
    RVec ei = RVec::Zero(d);
    ei[i] = 1.0;
    qe[i] = Q(to_cplx(ei));
    g(i, i) = qe[i];
  }
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      RVec e = RVec::Zero(d);
      e[i] = 1.0;
      e[j] = 1.0;
      double qij = Q(to_cplx(e));
      g(i, j) = g(j, i) = 0.5 * (qij - qe[i] - qe[j]);
    }
  return g;
}

namespace {

using MetricFn = std::function<RMat(const RVec&)>;

std::vector<RMat> metric_derivs(const MetricFn& g, const RVec& x, double h) {
  int d = int(x.size());
  std::vector<RMat> dg(d);
  for (int k = 0; k < d; ++k) {
    RVec xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    dg[k] = (g(xp) - g(xm)) / (2.0 * h);
  }
  return dg;
}

// Christoffel symbols Gamma[k](i,j) = Gamma^k_{ij}.
std::vector<RMat> christoffel(const MetricFn& g, const RVec& x, double h) {
  int d = int(x.size());
  RMat ginv = g(x).inverse();
  auto dg = metric_derivs(g, x, h);
  std::vector<RMat> G(d, RMat::Zero(d, d));
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int l = 0; l < d; ++l)
          s += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        G[k](i, j) = 0.5 * s;
      }
  return G;
}

double sectional_fd(const MetricFn& g, const RVec& x, const RVec& X, const RVec& Y,
                    double h) {
  int d = int(x.size());
  auto G0 = christoffel(g, x, h);
  // dGamma[i][k](j,l) = d_i Gamma^k_{jl}
  std::vector<std::vector<RMat>> dG(d);
  for (int i = 0; i < d; ++i) {
    RVec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    auto Gp = christoffel(g, xp, h);
    auto Gm = christoffel(g, xm, h);
    dG[i].resize(d);
    for (int k = 0; k < d; ++k) dG[i][k] = (Gp[k] - Gm[k]) / (2.0 * h);
  }
  // R(X,Y)Y, components l: R^l_{ijk} X^i Y^j Y^k with
  // R^l_{ijk} = d_i G^l_{jk} - d_j G^l_{ik} + G^l_{im} G^m_{jk} - G^l_{jm} G^m_{ik}
  RVec RXYY = RVec::Zero(d);
  for (int l = 0; l < d; ++l) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double xy = X[i] * Y[j];
        if (xy == 0.0) continue;
        for (int k = 0; k < d; ++k) {
          double r = dG[i][l](j, k) - dG[j][l](i, k);
          for (int m = 0; m < d; ++m)
            r += G0[l](i, m) * G0[m](j, k) - G0[l](j, m) * G0[m](i, k);
          acc += r * xy * Y[k];
        }
      }
    RXYY[l] = acc;
  }
  RMat gx = g(x);
  double num = X.dot(gx * RXYY);
  double den = X.dot(gx * X) * Y.dot(gx * Y) - std::pow(X.dot(gx * Y), 2);
  return num / den;
}

}  // namespace

std::pair<CVec, CVec> ball_orthonormalize(const CPoint& z, const CVec& X, const CVec& Y) {
  RMat g = ball_metric_matrix(z);
  RVec x = to_real(X), y = to_real(Y);
  x /= std::sqrt(x.dot(g * x));
  y -= x * (x.dot(g * y));
  double ny = std::sqrt(y.dot(g * y));
  if (ny < 1e-12) throw std::invalid_argument("ball_orthonormalize: Y parallel to X");
  y /= ny;
  return {to_cplx(x), to_cplx(y)};
}

double ball_curvature_closed_form(const CVec& X, const CVec& Y) {
  double p = rinner(X, apply_J(Y));
  return -(1.0 + 3.0 * p * p);
}

double ball_sectional_curvature(const CPoint& z, const CVec& X, const CVec& Y,
                                double ortho_tol) {
  RMat g0 = ball_metric_matrix(z);
  RVec x = to_real(X), y = to_real(Y);
  double defect = std::max({std::abs(x.dot(g0 * x) - 1.0), std::abs(y.dot(g0 * y) - 1.0),
                            std::abs(x.dot(g0 * y))});
  if (defect > ortho_tol)
    throw std::invalid_argument("ball_sectional_curvature: input pair not orthonormal, defect " +
                                fmt_g17(defect));
  MetricFn g = [](const RVec& xr) { return ball_metric_matrix(to_cplx(xr)); };
  RVec base = to_real(z);
  double h = 2e-3;
  double kh = sectional_fd(g, base, x, y, h);
  double kh2 = sectional_fd(g, base, x, y, h / 2);
  return (4.0 * kh2 - kh) / 3.0;  // Richardson, O(h^4)
}

// ---------------------------------------------------------------------------
CMat holomorphic_jacobian_fd(const std::function<CPoint(const CPoint&)>& f,
                             const CPoint& z, double h) {
  CPoint f0 = f(z);
  CMat J(f0.size(), z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    CPoint zp = z, zm = z;
    zp[j] += h;
    zm[j] -= h;
    J.col(j) = (f(zp) - f(zm)) / (2.0 * h);
  }
  return J;
}

}  // namespace invm::closed_form
