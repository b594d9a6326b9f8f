#pragma once

#include <optional>
#include <string>
#include <vector>

#include "invm/closed_form.hpp"
#include "invm/core.hpp"
#include "invm/domains.hpp"

namespace invm::ext {

using domains::Domain;
using closed_form::BoundTag;
using closed_form::MetricKind;
using closed_form::MetricValue;

struct DiscOptions {
  int degree = 8;              // N: polynomial degree of candidate discs
  int boundary_samples = 256;  // M: samples on |w| = r_eval
  int restarts = 8;
  std::uint64_t seed = 20240915;
  double r_eval = 1.0 - 1e-3;
  double margin_req = 1e-6;    // required clearance, relative to |rho(center)|
  double bisect_rel_tol = 1e-4;
  int inner_max_iter = 120;
  int path_segments = 32;

  std::string hash() const;
};

struct AnalyticDisc {
  CPoint center;              // f(0)
  std::vector<CVec> coeffs;   // c_1..c_N, f(w) = center + sum c_k w^k
  double r_eval = 0.0;
  double margin = 1.0;        // max of rho(f) over the boundary sample grid

  CPoint eval(cplx w) const;
};

struct MetricResult {
  MetricValue metric;
  AnalyticDisc disc;
};

/// F^K upper bound: 1/(alpha* r_eval) over feasible polynomial discs with
/// f(0) = z, f'(0) = alpha v.  Bisection on alpha (feasible alphas are
/// downward closed); the inner feasibility solve drives the boundary penalty
/// below the clearance.  Deterministic under opts.seed.
MetricResult kobayashi_infinitesimal_upper(const Domain& d, const CPoint& z,
                                           const CVec& v, const DiscOptions& opts = {});

struct LowerResult {
  MetricValue metric;
  bool warning_no_functional = false;
};

/// Certified F^C lower bound from holomorphic functionals D -> disc:
/// supporting half-planes, coordinate functionals, balanced-gauge supporting
/// functionals transported by the egg automorphisms, Cayley transport for the
/// Siegel models.
LowerResult caratheodory_infinitesimal_lower(const Domain& d, const CPoint& z,
                                             const CVec& v, const DiscOptions& opts = {});

struct Bracket {
  double lower = 0.0;
  double upper = 0.0;
  bool certified = false;
  double gap_rel() const { return lower > 0 ? (upper - lower) / lower : 1e300; }
};

/// Lempert bracket on convex domains; certified when the relative gap closes.
Bracket certify_metric(const Domain& d, const CPoint& z, const CVec& v, double gap_tol,
                       const DiscOptions& opts = {});

struct DistanceResult {
  MetricValue value;               // the better upper bound, tagged
  double lower = 0.0;              // functional lower bound (0 if unavailable)
  std::string method;              // "disc" | "path"
  double disc_value = -1.0;        // individual methods (-1 = failed/skipped)
  double path_value = -1.0;
  double path_refine_delta = 0.0;  // value change when doubling segments
};

DistanceResult kobayashi_distance(const Domain& d, const CPoint& z, const CPoint& w,
                                  const DiscOptions& opts = {});

/// Path-length approximation of the inner Caratheodory distance: optimize the
/// polyline with the cheap upper metric, then integrate the functional lower
/// metric along it.
MetricValue inner_caratheodory_distance(const Domain& d, const CPoint& z, const CPoint& w,
                                        const DiscOptions& opts = {});

/// Affine-disc upper bound 1/(s* r_eval): the largest round disc in direction v.
double cheap_metric_upper(const Domain& d, const CPoint& z, const CVec& v,
                          int circle_samples = 48);

struct Bbox {
  RVec lo, hi;  // real coordinates, dimension 2n
};

struct BallCloud {
  std::vector<CPoint> points;   // samples inside bbox and domain
  std::vector<double> dist;     // distance upper bounds from the center
  std::vector<char> inside;     // dist <= R
  double radius = 0.0;
};

/// Kobayashi metric ball by quasi-random (Halton) sampling of bbox ∩ domain.
BallCloud kobayashi_ball(const Domain& d, const CPoint& center, double R,
                         int samples, const Bbox& bbox, const DiscOptions& opts = {});

struct LemmaRReport {
  bool hypothesis_ok = false;   // B_D(q,b) ⊂ D' on the sampled cloud
  double d_sub = 0.0;           // d_{D'}(p,q)
  double d_dom = 0.0;           // d_D(p,q)
  double bound = 0.0;           // d_D(p,q)/tanh(b-a)
  bool satisfied = false;
};

LemmaRReport lemma_r_check(const Domain& d, const Domain& sub, const CPoint& p,
                           const CPoint& q, double b, const Bbox& bbox,
                           int samples = 160, const DiscOptions& opts = {});

/// Functional lower bound for the distance on domains with a usable family.
double distance_functional_lower(const Domain& d, const CPoint& z, const CPoint& w,
                                 const DiscOptions& opts = {});

}  // namespace invm::ext
