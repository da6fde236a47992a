#include "laplab/theory.hpp"

#include "laplab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace laplab {

namespace {

constexpr double kPi = std::numbers::pi;

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
// Computed once per order, machine accurate.
struct GaussRule {
  std::vector<double> nodes, weights;
};

GaussRule gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

const GaussRule& rule16() {
  static const GaussRule r = gauss_legendre(16);
  return r;
}

// Composite tensor-product Gauss-Legendre over one piece's parameter box.
double integrate_piece(const ManifoldPiece& p,
                       const std::function<double(const Vec&)>& fn,
                       const std::vector<int>& cells, int threads) {
  const GaussRule& gl = rule16();
  int d = p.box.dim();
  long long total_cells = 1;
  for (int c : cells) total_cells *= c;

  std::vector<double> cell_sum(static_cast<std::size_t>(total_cells), 0.0);
  parallel_for(static_cast<int>(total_cells), threads, [&](int flat) {
    std::vector<int> ci(d);
    long long rem = flat;
    for (int i = d - 1; i >= 0; --i) {
      ci[i] = static_cast<int>(rem % cells[i]);
      rem /= cells[i];
    }
    // Tensor GL nodes within the cell.
    std::vector<int> ni(d, 0);
    double acc = 0.0, comp = 0.0;
    Vec u(d);
    while (true) {
      double w = 1.0;
      for (int i = 0; i < d; ++i) {
        double h = p.box.side(i) / cells[i];
        double a = p.box.lo[i] + ci[i] * h;
        u[i] = a + 0.5 * h * (gl.nodes[ni[i]] + 1.0);
        w *= 0.5 * h * gl.weights[ni[i]];
      }
      double term = fn(u) * w;
      double y = term - comp;
      double s = acc + y;
      comp = (s - acc) - y;
      acc = s;
      int i = 0;
      for (; i < d; ++i) {
        if (++ni[i] < 16) break;
        ni[i] = 0;
      }
      if (i == d) break;
    }
    cell_sum[flat] = acc;
  });
  // Ordered reduction keeps the result independent of the worker count.
  double sum = 0.0, comp = 0.0;
  for (double v : cell_sum) {
    double y = v - comp;
    double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
  }
  return sum;
}

std::vector<int> cells_for(const ManifoldPiece& p, double t, int resolution) {
  // Node spacing (cell side / 16) must stay below sqrt(t)/4.
  std::vector<int> cells(p.box.dim());
  double max_spacing = std::sqrt(t) / 4.0;
  for (int i = 0; i < p.box.dim(); ++i) {
    int from_res = (resolution + 15) / 16;
    int from_t = static_cast<int>(std::ceil(p.box.side(i) / (16.0 * max_spacing)));
    cells[i] = std::max({1, from_res, from_t});
  }
  return cells;
}

}  // namespace

std::string to_string(LimitKind k) {
  switch (k) {
    case LimitKind::Interior: return "interior";
    case LimitKind::Boundary: return "boundary";
    case LimitKind::Intersection: return "intersection";
    case LimitKind::Edge: return "edge";
    case LimitKind::IntersectionCodim1: return "intersection_codim1";
  }
  return "?";
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

LimitPrediction predict_interior(double p, const Vec& grad_p, double hess_trace,
                                 const Vec& grad_f, int d) {
  if (std::isnan(hess_trace))
    throw std::invalid_argument("interior prediction needs the Hessian trace");
  double weighted = hess_trace + (2.0 / p) * grad_p.dot(grad_f);
  LimitPrediction out;
  out.kind = LimitKind::Interior;
  out.order = AsymptoticOrder::One;
  out.value = -0.25 * std::pow(kPi, 0.5 * d) * p * weighted;
  out.components["weighted_laplacian"] = weighted;
  out.components["density_term"] = (2.0 / p) * grad_p.dot(grad_f);
  return out;
}

LimitPrediction predict_boundary(double p_at_x0, double dn_f, double r, int d) {
  if (r < 0) throw std::invalid_argument("r must be nonnegative");
  double envelope = std::exp(-r * r);
  LimitPrediction out;
  out.kind = LimitKind::Boundary;
  out.order = AsymptoticOrder::InvSqrtT;
  out.value = -0.5 * std::pow(kPi, 0.5 * (d - 1)) * envelope * p_at_x0 * dn_f;
  out.components["envelope"] = envelope;
  return out;
}

LimitPrediction predict_intersection(double p_at_x0, double dn1_f1, double dn2_f2,
                                     double r, double theta, int d) {
  if (r < 0) throw std::invalid_argument("r must be nonnegative");
  if (!(theta > 0.0 && theta < kPi))
    throw std::invalid_argument("theta must lie in (0, pi)");
  double s = std::sin(theta), c = std::cos(theta);
  double envelope = r * std::exp(-r * r * s * s);
  LimitPrediction out;
  out.kind = LimitKind::Intersection;
  // On the locus the first-order term vanishes and the operator is O(1).
  out.order = (r == 0.0) ? AsymptoticOrder::One : AsymptoticOrder::InvSqrtT;
  out.value = std::pow(kPi, 0.5 * d) * envelope * p_at_x0 * (dn1_f1 + c * dn2_f2);
  out.components["envelope"] = envelope;
  out.components["cos_theta"] = c;
  return out;
}

LimitPrediction predict_edge(double p_at_x0, double dn1_f, double dn2_f, double r,
                             double theta, int d) {
  if (r < 0) throw std::invalid_argument("r must be nonnegative");
  if (!(theta > 0.0 && theta <= kPi))
    throw std::invalid_argument("theta must lie in (0, pi]");
  double s = std::sin(theta), c = std::cos(theta);
  double half_gauss = 0.5 * std::pow(kPi, 0.5 * (d - 1)) * std::exp(-r * r);
  double shadow = r * std::pow(kPi, 0.5 * d) * normal_cdf(std::numbers::sqrt2 * r * c) *
                  std::exp(-r * r * s * s);
  double alpha = half_gauss - shadow;
  double beta = half_gauss + shadow * c;
  LimitPrediction out;
  out.kind = LimitKind::Edge;
  out.order = AsymptoticOrder::InvSqrtT;
  out.value = -p_at_x0 * (alpha * dn1_f + beta * dn2_f);
  out.components["alpha"] = alpha;
  out.components["beta"] = beta;
  return out;
}

LimitPrediction predict_intersection_codim1(double p_at_x0, double d1_plus,
                                            double d1_minus, double d2_plus,
                                            double d2_minus, int d) {
  LimitPrediction out;
  out.kind = LimitKind::IntersectionCodim1;
  out.order = AsymptoticOrder::InvSqrtT;
  double sum = d1_plus + d1_minus + d2_plus + d2_minus;
  out.value = -0.5 * std::pow(kPi, 0.5 * (d - 1)) * p_at_x0 * sum;
  out.components["one_sided_sum"] = sum;
  return out;
}

double quadrature_over_manifold(const SingularManifold& m,
                                const std::function<double(int, const Vec&)>& fn,
                                int nodes_per_dim, int threads) {
  double total = 0.0;
  for (const auto& p : m.pieces) {
    std::vector<int> cells(p.box.dim(), std::max(1, (nodes_per_dim + 15) / 16));
    total += integrate_piece(
        p,
        [&](const Vec& u) {
          return fn(p.id, p.chart(u)) * p.jacobian_norm(u);
        },
        cells, threads);
  }
  return total;
}

double quadrature_Lt(const SingularManifold& m, const ScalarField& field,
                     const Vec& x, int piece, double t, int resolution,
                     int threads) {
  if (!(t > 0)) throw std::invalid_argument("t must be positive");
  if (resolution != 0 && resolution < 64)
    throw std::invalid_argument("resolution below 64 nodes per dimension");
  double fx = field.value(piece, x);
  double tpow = std::pow(t, -0.5 * m.intrinsic_dim());
  double max_spacing = std::sqrt(t) / 4.0;
  double total = 0.0;
  for (const auto& p : m.pieces) {
    std::vector<int> cells(p.box.dim());
    for (int i = 0; i < p.box.dim(); ++i) {
      if (resolution != 0) {
        // Explicit resolutions are honored but must satisfy the spacing rule.
        int c = (resolution + 15) / 16;
        if (p.box.side(i) / (16.0 * c) >= max_spacing)
          throw std::invalid_argument(
              "resolution too low for the requested t (node spacing must be "
              "below sqrt(t)/4)");
        cells[i] = c;
      } else {
        cells[i] = std::max(
            4, static_cast<int>(std::ceil(p.box.side(i) / (16.0 * max_spacing))));
      }
    }
    total += integrate_piece(
        p,
        [&](const Vec& u) {
          Vec y = p.chart(u);
          double d2 = (x - y).squaredNorm();
          double k = tpow * std::exp(-d2 / t);
          return k * (fx - field.value(p.id, y)) * m.density.value(p.id, y) *
                 p.jacobian_norm(u);
        },
        cells, threads);
  }
  return total / t;
}

double kernel_mass(const SingularManifold& m, const Vec& x, double t,
                   int resolution) {
  double tpow = std::pow(t, -0.5 * m.intrinsic_dim());
  double total = 0.0;
  for (const auto& p : m.pieces) {
    std::vector<int> cells = cells_for(p, t, resolution);
    total += integrate_piece(
        p,
        [&](const Vec& u) {
          Vec y = p.chart(u);
          return tpow * std::exp(-(x - y).squaredNorm() / t) * p.jacobian_norm(u);
        },
        cells, 1);
  }
  return total;
}

BoundParams BoundParams::from_constants(double M, double b, double C_g, int d) {
  BoundParams bp;
  bp.M = M;
  bp.b = b;
  bp.d = d;
  bp.C_m = M;
  bp.C_v = M * M * b * C_g;
  bp.validate();
  return bp;
}

void BoundParams::validate() const {
  if (!(C_v > 0 && C_m > 0 && M > 0 && b > 0 && d >= 1))
    throw std::invalid_argument("bound constants must be strictly positive");
}

double concentration_bound(const BoundParams& params, double n, double t, double eps) {
  params.validate();
  if (!(n > 0 && t > 0 && eps > 0))
    throw std::invalid_argument("bound inputs must be positive");
  double exponent = -(n * std::pow(t, 0.5 * params.d + 2.0) * eps * eps) /
                    (2.0 * params.C_v + 2.0 * params.C_m * eps * t / 3.0);
  double raw = 2.0 * n * std::exp(exponent);
  return std::min(1.0, raw);
}

double bandwidth_schedule(double n, int d, ScheduleRegime regime,
                          double g_log_exponent) {
  if (n < 3) throw std::invalid_argument("schedule needs n >= 3");
  double base = std::log(n) / n;
  double e = (regime == ScheduleRegime::Interior) ? 2.0 / (d + 4) : 2.0 / (d + 2);
  return std::pow(base, e) * std::pow(std::log(n), g_log_exponent);
}

// ---------------------------------------------------------------------------
// predict_at: annotation -> closed-form inputs -> prediction + oracle

namespace {

// Tangential density gradient by central differences along the frame.
Vec density_gradient(const SingularManifold& m, int piece, const Vec& x,
                     const Mat& frame) {
  double h = 1e-6;
  Vec g(frame.cols());
  for (int i = 0; i < frame.cols(); ++i) {
    Vec e = frame.col(i);
    g[i] = (m.density.value(piece, x + h * e) - m.density.value(piece, x - h * e)) /
           (2 * h);
  }
  return g;
}

}  // namespace

PredictionReport predict_at(const SingularManifold& m, const ScalarField& field,
                            const Vec& x, int piece, double t,
                            int oracle_resolution,
                            std::optional<double> empirical) {
  double sqrt_t = std::sqrt(t);
  Annotation ann = annotate(m, x, piece, 10.0 * sqrt_t);
  const ManifoldPiece& pc = m.piece(piece);
  if (!pc.is_affine)
    throw std::invalid_argument("predict_at supports affine pieces only");

  PredictionReport rep;
  rep.t = t;
  double oracle = quadrature_Lt(m, field, x, piece, t, oracle_resolution);

  LimitPrediction pred;
  if (ann.regular) {
    // Interior: tangential gradients and Hessian trace on the piece frame.
    if (!field.has_hessian())
      throw std::invalid_argument("interior prediction needs the field Hessian");
    const Mat& frame = pc.affine_frame;
    double p = m.density.value(piece, x);
    Vec grad_f = frame.transpose() * field.gradient(piece, x);
    Vec grad_p = density_gradient(m, piece, x, frame);
    double hess_trace = field.laplacian_on(frame, piece, x);
    pred = predict_interior(p, grad_p, hess_trace, grad_f, m.intrinsic_dim());
    rep.r = ann.r_ambient / sqrt_t;
    rep.oracle_value = oracle;
  } else {
    const auto& spec = m.singularities[ann.singularity_index];
    double r = ann.r_ambient / sqrt_t;
    double p0 = m.density.value(spec.pieces[0], ann.x0);
    int d = m.intrinsic_dim();
    if (ann.kind == SingKind::Boundary) {
      double dnf = field.deriv(piece, ann.x0, ann.n1);
      pred = predict_boundary(p0, dnf, r, d);
    } else {
      int other = (spec.pieces[0] == piece) ? spec.pieces[1] : spec.pieces[0];
      if (ann.kind == SingKind::Edge) {
        double dn1 = field.deriv(piece, ann.x0, ann.n1);
        double dn2 = field.deriv(other, ann.x0, *ann.n2);
        pred = predict_edge(p0, dn1, dn2, r, *ann.theta, d);
      } else {
        // The closed form wants the second piece's derivative oriented
        // toward the locus; stored normals point away from it.
        double dn1 = field.deriv(piece, ann.x0, ann.n1);
        double dn2 = field.deriv(other, ann.x0, Vec(-*ann.n2));
        pred = predict_intersection(p0, dn1, dn2, r, *ann.theta, d);
      }
      rep.theta = ann.theta;
    }
    rep.r = r;
    rep.oracle_value =
        (pred.order == AsymptoticOrder::InvSqrtT) ? sqrt_t * oracle : oracle;
  }
  rep.kind = pred.kind;
  rep.order = pred.order;
  rep.coefficient = pred.value;
  rep.components = pred.components;
  rep.empirical_value = empirical;
  double denom = std::max(std::abs(rep.oracle_value), 1e-12);
  rep.relative_error = std::abs(rep.coefficient - rep.oracle_value) / denom;
  return rep;
}

}  // namespace laplab
