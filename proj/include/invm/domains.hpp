#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "invm/core.hpp"

namespace invm::domains {

enum class Kind {
  disc,
  ball,
  polydisc,
  product,
  egg_bounded,
  egg_siegel,
  perturbed_egg,
  half_space_model,
  custom,
  transformed,
};

std::string kind_name(Kind k);

/// One monomial of a boundary perturbation: coef * Re(z1^a * conj(z1)^b).
struct PertTerm {
  int a = 0;
  int b = 0;
  double coef = 0.0;
};

/// Holomorphic map handle with explicit inverse and Jacobian of the forward
/// direction.  The catalog maps (dilations, shears, Cayley) all have cheap
/// closed-form inverses, so nothing here is iterative.
struct HoloMap {
  std::string name;
  std::function<CPoint(const CPoint&)> fwd;
  std::function<CPoint(const CPoint&)> inv;
  std::function<CMat(const CPoint&)> jac_fwd;
};

HoloMap compose(const HoloMap& outer, const HoloMap& inner);  // outer after inner
HoloMap identity_map(int n);
HoloMap affine_map(std::string name, const CMat& A, const CPoint& b);  // z -> A z + b

struct Domain {
  std::string name;
  Kind kind = Kind::custom;
  int dim = 0;
  bool convex = false;
  bool bounded = false;
  double boundary_tol = 1e-9;  // |rho| certificate at projected points
  int egg_m = 0;               // egg exponent, 0 when not an egg
  double halfspace_R = 0.0;
  std::vector<PertTerm> pert;
  std::vector<Domain> factors;  // product structure, empty otherwise

  std::function<double(const CPoint&)> rho;
  /// Holomorphic gradient (d rho / d z_j); the real gradient is 2*conj of it.
  std::function<CVec(const CPoint&)> dz;

  // Closed forms where the catalog has them; generic projection otherwise.
  std::function<double(const CPoint&)> bdist_closed;
  std::function<CPoint(const CPoint&)> bproj_closed;

  CPoint anchor;  // a canonical interior point

  bool contains(const CPoint& z) const;
};

// ----- catalog ---------------------------------------------------------------
Domain disc();
Domain ball(int n);
Domain polydisc(int n);
Domain product(const Domain& a, const Domain& b);
Domain egg_bounded(int m);
Domain egg_siegel(int m);
Domain perturbed_egg(int m, std::vector<PertTerm> terms);
Domain half_space_model(double R);
Domain custom(std::string name, int n, std::function<double(const CPoint&)> rho,
              CPoint anchor, bool convex = false, bool bounded = false);

/// Pushforward of `base` under `map`: interior = map(interior), with the
/// defining function rho(base.inv)/rho_scale.  Flags are the caller's call.
Domain transformed(const Domain& base, const HoloMap& map, double rho_scale,
                   std::string name, bool convex, bool bounded);

// ----- boundary geometry -----------------------------------------------------
double boundary_distance(const Domain& d, const CPoint& z);
CPoint nearest_boundary_point(const Domain& d, const CPoint& z);

/// Splits v at pi(z) into the component along the complex normal line and the
/// complex-tangential rest; returns (v_T, v_N) with v = v_T + v_N exactly.
std::pair<CVec, CVec> tangential_normal_split(const Domain& d, const CPoint& z,
                                              const CVec& v);

/// Real gradient of rho as a vector in C^n (= 2 conj(d rho/d z)).
CVec real_gradient(const Domain& d, const CPoint& z);

/// Central-difference holomorphic gradient for custom defining functions.
CVec fd_holomorphic_gradient(const std::function<double(const CPoint&)>& rho,
                             const CPoint& z, double h = 1e-6);

/// Cayley-type equivalence bounded egg -> Siegel egg:
///   w2 = (z2-1)/(z2+1),  w1 = 2^{1/2m} z1 / (1+z2)^{1/m}
/// principal branch on Re(1+z2) > 0; throws near the branch cut.
HoloMap egg_cayley(int m);

}  // namespace invm::domains
