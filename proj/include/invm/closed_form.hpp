#pragma once

#include <functional>
#include <vector>

#include "invm/core.hpp"
#include "invm/domains.hpp"

namespace invm::closed_form {

enum class MetricKind { kobayashi, caratheodory, inner_caratheodory };
enum class BoundTag { exact, upper, lower };

struct MetricValue {
  double value = 0.0;
  MetricKind kind = MetricKind::kobayashi;
  BoundTag bound = BoundTag::exact;
};

const char* kind_name(MetricKind k);
const char* bound_name(BoundTag b);

// All closed forms use the curvature -4 normalization: F_disc(z,v) =
// |v|/(1-|z|^2), d_disc(0,r) = atanh r.  CURV_NORM is the single knob.
inline constexpr double CURV_NORM = 1.0;

double poincare_metric(cplx z, cplx v);
double poincare_distance(cplx z, cplx w);

double ball_infinitesimal(const CPoint& z, const CVec& v);
double ball_distance(const CPoint& z, const CPoint& w);

/// Automorphism of the unit ball exchanging a and 0 (an involution).
domains::HoloMap ball_automorphism(const CPoint& a);

double polydisc_infinitesimal(const CPoint& z, const CVec& v);
double polydisc_distance(const CPoint& z, const CPoint& w);

using DistanceOracle = std::function<double(const CPoint&, const CPoint&)>;
double product_distance(const std::vector<std::pair<int, DistanceOracle>>& factors,
                        const CPoint& z, const CPoint& w);

/// Riemannian metric of F_ball^2 at z as a real 2n x 2n Gram matrix.
RMat ball_metric_matrix(const CPoint& z);

/// Sectional curvature of span(X, Y) by finite differences of the ball metric
/// with Richardson extrapolation.  X, Y must be orthonormal in the Kobayashi
/// inner product at z (defect above ortho_tol is an error).
double ball_sectional_curvature(const CPoint& z, const CVec& X, const CVec& Y,
                                double ortho_tol = 1e-8);

/// g-orthonormalizes (X, Y) at z for feeding the curvature routine.
std::pair<CVec, CVec> ball_orthonormalize(const CPoint& z, const CVec& X, const CVec& Y);

/// The constant-holomorphic-curvature closed form -(1 + 3 <X, J0 Y>^2); the
/// finite-difference oracle is checked against it in the tests.
double ball_curvature_closed_form(const CVec& X, const CVec& Y);

/// Complex Jacobian of a holomorphic map by central differences.
CMat holomorphic_jacobian_fd(const std::function<CPoint(const CPoint&)>& f,
                             const CPoint& z, double h = 1e-5);

}  // namespace invm::closed_form
