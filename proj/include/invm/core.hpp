#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace invm {

using cplx = std::complex<double>;
using CPoint = Eigen::VectorXcd;   // point in C^n (ambient coordinates)
using CVec = Eigen::VectorXcd;     // tangent vector at a base point
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

inline CPoint cpoint2(cplx a, cplx b) {
  CPoint p(2);
  p << a, b;
  return p;
}

/// Hermitian inner product <a,b> = sum a_i conj(b_i).
inline cplx hinner(const CVec& a, const CVec& b) { return b.dot(a); }

/// Real inner product on C^n viewed as R^{2n}.
inline double rinner(const CVec& a, const CVec& b) { return hinner(a, b).real(); }

// C^n <-> R^{2n} identification, interleaved (x1,y1,x2,y2,...).
inline RVec to_real(const CPoint& z) {
  RVec x(2 * z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    x[2 * i] = z[i].real();
    x[2 * i + 1] = z[i].imag();
  }
  return x;
}

inline CPoint to_cplx(const RVec& x) {
  CPoint z(x.size() / 2);
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = cplx(x[2 * i], x[2 * i + 1]);
  return z;
}

/// Multiplication by i on the underlying real tangent space.
inline CVec apply_J(const CVec& v) { return cplx(0.0, 1.0) * v; }

// ---------------------------------------------------------------------------
// Deterministic RNG.  splitmix64 core; identical streams on every platform,
// which the golden-file and replay machinery relies on.
// ---------------------------------------------------------------------------
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() { return double(next() >> 11) * 0x1.0p-53; }  // [0,1)
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    // Box-Muller, one value per call (the pair's partner is discarded so the
    // stream stays position-independent).
    double u1 = uniform(), u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  cplx unit_circle() {
    double t = uniform(0.0, 6.283185307179586476925287);
    return cplx(std::cos(t), std::sin(t));
  }

  /// Uniform direction on the unit sphere of R^d.
  RVec sphere(int d) {
    RVec v(d);
    for (int i = 0; i < d; ++i) v[i] = normal();
    double n = v.norm();
    if (n < 1e-12) { v.setZero(); v[0] = 1.0; return v; }
    return v / n;
  }

  /// Random point in the ball of radius r around the origin of C^n.
  CPoint in_cball(int n, double r) {
    for (;;) {
      RVec x(2 * n);
      for (int i = 0; i < 2 * n; ++i) x[i] = uniform(-1.0, 1.0);
      if (x.norm() <= 1.0) return to_cplx(RVec(r * x));
    }
  }
};

// ---------------------------------------------------------------------------
// Small numeric helpers.
// ---------------------------------------------------------------------------
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("fit_line: need >= 2 matched samples");
  double n = double(xs.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-300) throw std::runtime_error("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

inline double softplus(double x, double beta) {
  double t = beta * x;
  if (t > 30.0) return x;
  if (t < -30.0) return std::exp(t) / beta;
  return std::log1p(std::exp(t)) / beta;
}

/// atanh with a guard against |x| >= 1 (returns a large finite value).
inline double atanh_safe(double x) {
  if (x <= -1.0 + 1e-15) return -18.0;
  if (x >= 1.0 - 1e-15) return 18.0;
  return std::atanh(x);
}

/// Shortest-format decimal that round-trips; used for every numeric report cell.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace invm
