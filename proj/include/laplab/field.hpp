#pragma once

#include "laplab/geometry.hpp"

namespace laplab {

/// Piecewise-smooth scalar field: per-piece value with analytic ambient
/// gradient and optional Hessian of the smooth per-piece extension.
/// Fields restricted from a single ambient expression are C^infty across
/// singular sets; per-piece fields are only guaranteed C^0 there.
struct ScalarField {
  std::string name;
  std::function<double(int piece, const Vec&)> value;
  std::function<Vec(int piece, const Vec&)> gradient;
  std::function<Mat(int piece, const Vec&)> hessian;  // may be null
  bool c1_across = true;  // C^1 across singular sets (C^0 always holds)

  bool has_hessian() const { return static_cast<bool>(hessian); }

  /// Directional derivative of the piece restriction along unit vector u.
  double deriv(int piece, const Vec& x, const Vec& u) const {
    return gradient(piece, x).dot(u);
  }
  /// Trace of the tangential Hessian over an orthonormal tangent frame.
  double laplacian_on(const Mat& frame, int piece, const Vec& x) const;
};

/// f == c everywhere.
ScalarField constant_field(double c);

/// f(x) = x[k] (ambient coordinate projection).
ScalarField coordinate_field(int k);

/// The planar test field (x1 + 0.2)^2 + x2^2.
ScalarField d1_field();

/// Piecewise-linear "kinked" field on a two-piece glued manifold:
/// f = a_i * <x - apex, inward_i> on piece i. C^0 at the apex, C^2 inside
/// each piece; C^1 across only when the slopes happen to agree.
ScalarField kinked_field(const SingularManifold& m, double a1, double a2);

/// |arclength| along piece 0 of a crossing, zero on the other piece.
/// Only C^0 at the crossing; pairs with the codimension-1 crossing form.
ScalarField abs_arclength_field(const SingularManifold& m);

/// Samples locus points of every singularity and checks that the piece
/// restrictions agree there within tol. Throws on violation.
void check_field_continuity(const SingularManifold& m, const ScalarField& f,
                            double tol = 1e-9, int samples_per_locus = 16);

}  // namespace laplab
