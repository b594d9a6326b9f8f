#pragma once

#include <map>
#include <memory>
#include <vector>

#include "invm/core.hpp"
#include "invm/domains.hpp"

namespace invm::cat {

using domains::Domain;
using domains::HoloMap;

/// Normalizing frame at a base point zeta in D close to a finite-type
/// boundary point: the automorphism data d^0..d^{2m} and the non-harmonic
/// homogeneous parts P_l of the pushed-forward defining function.
struct CatlinFrame {
  CPoint base;             // zeta
  int type2m = 0;          // 2m
  cplx d0 = 1.0;           // coefficient on w2
  std::vector<cplx> dl;    // d^1..d^{2m} (index l-1)
  // pcoef[l] holds the degree-l coefficients c_{ab} (a+b = l, a,b >= 1) as a
  // dense (l+1)-vector indexed by a; entries with b = 0 or a = 0 stay zero.
  std::vector<std::vector<cplx>> pcoef;  // index l = 0..2m (0,1 unused)

  double pnorm(int l) const;                 // max |coefficient| of P_l
  double eval_P(int l, cplx w1) const;       // P_l(w1, conj w1)
  HoloMap normalizer() const;                // phi^zeta as a holomorphic map
};

/// Builds the frame by a triangular sweep on the harmonic Taylor coefficients
/// of rho(phi^{-1}(w1, 0)); exact circle-sampling expansion for the
/// polynomial catalog, finite-difference radii otherwise.
CatlinFrame catlin_normalize(const Domain& d, const CPoint& zeta, int m);

/// tau(zeta, delta) = min_l (delta/||P_l||)^{1/l}; zero-norm degrees skipped.
double tau(const CatlinFrame& frame, double delta);

HoloMap catlin_dilation(const CatlinFrame& frame, double delta);

struct Bidisc {
  CatlinFrame frame;
  double delta = 0.0;
  bool member(const CPoint& z) const;
};

Bidisc bidisc_Q(const CatlinFrame& frame, double delta);

class FrameCache {
 public:
  explicit FrameCache(const Domain& d, int m) : dom_(&d), m_(m) {}
  const CatlinFrame& at(const CPoint& zeta);

 private:
  const Domain* dom_;
  int m_;
  std::map<std::string, std::unique_ptr<CatlinFrame>> cache_;
};

/// d'(a,b) = inf { delta : a in Q(b, delta) } by bisection (monotone
/// membership checked; grid-scan fallback otherwise).
double dprime(const Domain& d, const CPoint& a, const CPoint& b, FrameCache& frames);

double dtilde(const Domain& d, const CPoint& a, const CPoint& b, FrameCache& frames);

/// Herbort's rho*(a,b) = log(1 + dtilde/d(a,bd) + |<L(a), a-b>|/tau(a, d(a,bd))).
double rho_star(const Domain& d, const CPoint& a, const CPoint& b, FrameCache& frames);

/// Sup of |rho(phi^{-1}(w)) - [rho(zeta) + 2 Re w2 + sum P_l]| over the
/// anisotropic test box |w1| <= s, |w2| <= s^{2m}, normalized by s^{2m}.
/// Shrinks to zero with s when the frame is correct.
double frame_residual(const Domain& d, const CatlinFrame& frame, double s);

}  // namespace invm::cat
