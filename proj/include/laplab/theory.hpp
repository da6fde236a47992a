#pragma once

#include "laplab/field.hpp"
#include "laplab/operator.hpp"

#include <map>

namespace laplab {

enum class LimitKind { Interior, Boundary, Intersection, Edge, IntersectionCodim1 };

std::string to_string(LimitKind k);

enum class AsymptoticOrder { One, InvSqrtT };

/// A closed-form limit value. For singular kinds `value` is the
/// coefficient of 1/sqrt(t); the caller multiplies by the power of t
/// implied by `order` when comparing against concrete operators.
struct LimitPrediction {
  LimitKind kind = LimitKind::Interior;
  double value = 0.0;
  AsymptoticOrder order = AsymptoticOrder::One;
  std::map<std::string, double> components;
};

/// Standard normal CDF via the complementary error function.
double normal_cdf(double x);

/// Interior limit of the operator at a regular point:
///   -(1/4) pi^{d/2} p [ tr H_tan + (2/p) <grad p, grad f> ].
/// The 1/4 constant is what the operator integral actually converges
/// to for this kernel normalization (see tests); hess_trace is the
/// tangential Laplacian of f and the gradients are tangential.
LimitPrediction predict_interior(double p, const Vec& grad_p, double hess_trace,
                                 const Vec& grad_f, int d);

/// Boundary limit coefficient: -(pi^{(d-1)/2}/2) e^{-r^2} p dnf, with n
/// the inward normal at the nearest boundary point and r in sqrt(t) units.
LimitPrediction predict_boundary(double p_at_x0, double dn_f, double r, int d);

/// Intersection limit coefficient:
///   pi^{d/2} r e^{-r^2 sin^2 theta} p (dn1_f1 + cos(theta) dn2_f2).
/// dn1_f1 is the piece-1 derivative away from the locus (toward the
/// query); dn2_f2 is the piece-2 derivative toward the locus. With that
/// orientation the closed form matches the integral at every angle; at
/// theta = pi/2 the second term vanishes. r = 0 reports order O(1).
LimitPrediction predict_intersection(double p_at_x0, double dn1_f1, double dn2_f2,
                                     double r, double theta, int d);

/// Edge (glued boundaries) limit coefficient
///   -p [ alpha(r,theta) dn1_f + beta(r,theta) dn2_f ]
/// with inward boundary normals and
///   alpha = pi^{(d-1)/2}/2 e^{-r^2} - r pi^{d/2} Phi(sqrt2 r cos th) e^{-r^2 sin^2 th}
///   beta  = pi^{(d-1)/2}/2 e^{-r^2} + r pi^{d/2} Phi(sqrt2 r cos th) cos th e^{-r^2 sin^2 th}.
LimitPrediction predict_edge(double p_at_x0, double dn1_f, double dn2_f,
                             double r, double theta, int d);

/// Codimension-1 crossing with a field that is only C^0 there: four
/// one-sided inward derivatives, coefficient
///   -(pi^{(d-1)/2}/2) p (d1p + d1m + d2p + d2m).
LimitPrediction predict_intersection_codim1(double p_at_x0, double d1_plus,
                                            double d1_minus, double d2_plus,
                                            double d2_minus, int d);

/// Composite Gauss-Legendre quadrature of the functional operator
///   L_t f(x) = (1/t) Int K_t(x,y) (f(x) - f(y)) p(y) dy
/// over every piece's parameter box. resolution is the per-dimension node
/// count floor; cells are refined until the node spacing is below
/// sqrt(t)/4. This is the independent oracle for derived values.
double quadrature_Lt(const SingularManifold& m, const ScalarField& field,
                     const Vec& x, int piece, double t, int resolution = 0,
                     int threads = 1);

/// Quadrature of an arbitrary integrand over the manifold (same engine).
double quadrature_over_manifold(const SingularManifold& m,
                                const std::function<double(int, const Vec&)>& fn,
                                int nodes_per_dim, int threads = 1);

/// Int K_t(x, y) dy over the manifold (the Bernstein-bound constant C_g).
double kernel_mass(const SingularManifold& m, const Vec& x, double t,
                   int resolution = 0);

/// Constants of the concentration bound. From the Bernstein derivation:
/// C_m = M and C_v = M^2 b C_g with M = sup|f|, b the density upper
/// bound, C_g the kernel mass.
struct BoundParams {
  double C_v = 1.0;
  double C_m = 1.0;
  double M = 1.0;
  double b = 1.0;
  int d = 1;

  static BoundParams from_constants(double M, double b, double C_g, int d);
  void validate() const;
};

/// min(1, 2n exp( - n t^{d/2+2} eps^2 / (2 C_v + 2 C_m eps t / 3) )).
double concentration_bound(const BoundParams& params, double n, double t, double eps);

enum class ScheduleRegime { Interior, Singular };

/// Bandwidth schedules t(n) = (log n / n)^e * g(n), g(n) = (log n)^g_exp,
/// with e = 2/(d+4) for interior accuracy and e = 2/(d+2) for the
/// rescaled operator near singular sets. For n >= 3 the base is < 1, so
/// the singular schedule returns the smaller bandwidth.
double bandwidth_schedule(double n, int d, ScheduleRegime regime,
                          double g_log_exponent = 0.0);

/// Everything needed to compare one query against the matching closed form:
/// annotation-driven prediction, the quadrature oracle and (optionally)
/// an empirical operator value.
struct PredictionReport {
  LimitKind kind = LimitKind::Interior;
  double t = 0.0;
  double r = 0.0;
  std::optional<double> theta;
  double coefficient = 0.0;  // of the order term
  AsymptoticOrder order = AsymptoticOrder::One;
  std::map<std::string, double> components;
  double oracle_value = 0.0;     // sqrt(t)-scaled for singular kinds
  std::optional<double> empirical_value;
  double relative_error = 0.0;   // |prediction - oracle| / max(|oracle|, eps)
};

/// Builds the closed-form inputs from the annotation of x (normals stored
/// away from the locus; the intersection second-piece derivative is
/// flipped toward the locus as the closed form requires) and evaluates
/// prediction and oracle. Points farther than the horizon from every
/// singular set are treated as interior.
PredictionReport predict_at(const SingularManifold& m, const ScalarField& field,
                            const Vec& x, int piece, double t,
                            int oracle_resolution = 0,
                            std::optional<double> empirical = std::nullopt);

}  // namespace laplab
