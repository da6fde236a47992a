// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion pins its tolerances and runtime budget in code.

#include "laplab/expr.hpp"
#include "laplab/io.hpp"
#include "laplab/spectral.hpp"

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>

using namespace laplab;

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrtPi = std::sqrt(kPi);

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Check {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

Vec v1(double a) {
  Vec v(1);
  v << a;
  return v;
}

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// --------------------------------------------------------------------------

Outcome constant_field_nullity() {
  Outcome out;
  double worst = 0.0;
  double apply_seconds = 0.0;
  for (const char* name : {"interval", "three_intervals", "folded_rectangle"}) {
    SingularManifold m = build_builtin(name);
    AnnotatedCloud cloud = sample(m, 5000, SampleMode::Grid, 0);
    LaplacianConfig cfg;
    cfg.t = 1e-3;
    cfg.d = m.intrinsic_dim();
    ScalarField f = constant_field(3.7);
    std::vector<Query> all;
    for (int i = 0; i < cloud.size(); ++i) all.push_back(i);
    auto t0 = std::chrono::steady_clock::now();
    std::vector<double> vals = apply_laplacian(cfg, cloud, f, all);
    apply_seconds = std::max(
        apply_seconds,
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count());
    for (double v : vals) worst = std::max(worst, std::abs(v));
  }
  out.pass = (worst == 0.0) && (apply_seconds < 1.0);
  out.detail = fmt("max |Lf| = %g over three builtins, slowest apply %.2fs",
                   worst, apply_seconds);
  return out;
}

Outcome interior_limit() {
  // A doubled version of this constant (-sqrt(pi)) circulates for this
  // limit; the operator integral and the finite-sample operator both
  // converge to -sqrt(pi)/2 (the interior constant is pi^{d/2}/4 for this
  // kernel normalization), so the oracle-derived target is pinned.
  Outcome out;
  SingularManifold m = build_builtin("interval");
  double t = 1e-4;
  AnnotatedCloud cloud = sample(m, 5000, SampleMode::Grid, 0, 10 * std::sqrt(t));
  LaplacianConfig cfg;
  cfg.t = t;
  cfg.d = 1;
  ScalarField f = expression_field("x1^2", 1);
  std::vector<Query> qs;
  for (int i = 0; i < cloud.size(); ++i)
    if (cloud.annotations[i].regular) qs.push_back(i);
  std::vector<double> vals = apply_laplacian(cfg, cloud, f, qs);
  std::sort(vals.begin(), vals.end());
  double median = vals[vals.size() / 2];
  double oracle = quadrature_Lt(m, f, v1(0.5), 0, t);
  double target = -kSqrtPi / 2;
  out.pass = std::abs(median - target) <= 0.10 * std::abs(target) &&
             std::abs(oracle - target) <= 0.005 * std::abs(target);
  out.detail =
      fmt("median %.5f vs oracle-derived target %.5f (ratio %.4f); oracle %.5f; "
          "the doubled constant -sqrt(pi) would give ratio %.3f",
          median, target, median / target, oracle, median / (-kSqrtPi));
  return out;
}

Outcome boundary_limit() {
  Outcome out;
  SingularManifold m = build_builtin("interval");
  AnnotatedCloud cloud = sample(m, 5000, SampleMode::Grid, 0);
  ScalarField f = coordinate_field(0);
  std::ostringstream detail;
  for (double t : {1e-3, 1e-4}) {
    LaplacianConfig cfg;
    cfg.t = t;
    cfg.d = 1;
    double v = std::sqrt(t) * apply_laplacian(cfg, cloud, f, {Query(0)})[0];
    bool ok = std::abs(v - (-0.5)) <= 0.10 * 0.5;
    out.pass = out.pass && ok;
    detail << fmt("t=%g: sqrt(t)L=%.5f ", t, v);
  }
  detail << "(target -0.5)";
  out.detail = detail.str();
  return out;
}

Outcome intersection_profile() {
  Outcome out;
  SingularManifold m = build_builtin("crossing_segments", {{"theta", kPi / 2}});
  AnnotatedCloud cloud = sample(m, 4000, SampleMode::Grid, 0);
  double t = 1e-4;
  LaplacianConfig cfg;
  cfg.t = t;
  cfg.d = 1;
  ScalarField f = coordinate_field(0);
  Vec q1 = v2(std::sqrt(t), 0.0);
  double L1 = apply_laplacian(cfg, cloud, f,
                              {Query(ExternalQuery{q1, 0, std::sqrt(t)})})[0];
  double L0 =
      apply_laplacian(cfg, cloud, f, {Query(ExternalQuery{v2(0, 0), 0, 0.0})})[0];
  PredictionReport pr = predict_at(m, f, q1, 0, t);
  double scaled = std::sqrt(t) * L1;
  bool match = std::abs(scaled - pr.coefficient) <= 0.15 * std::abs(pr.coefficient);
  bool oracle_ok =
      std::abs(pr.coefficient - pr.oracle_value) <= 0.05 * std::abs(pr.oracle_value);
  bool flat_at_zero = std::abs(L0) <= 0.05 * std::abs(L1);
  out.pass = match && oracle_ok && flat_at_zero;
  out.detail = fmt("sqrt(t)L(r=1)=%.5f coeff=%.5f oracle=%.5f; |L(0)|=%.2e vs cap %.2e",
                   scaled, pr.coefficient, pr.oracle_value, std::abs(L0),
                   0.05 * std::abs(L1));
  return out;
}

// Two collinear half-lines glued at the origin: a smooth segment built
// from two pieces, for the flat-gluing (theta = pi) edge case.
SingularManifold flat_glued_line() {
  SingularManifold m = build_builtin("glued_halflines", {{"theta", kPi / 2}});
  SingularManifold flat;
  flat.name = "flat_glued_line";
  Mat f1(2, 1), f2(2, 1);
  f1 << 1, 0;
  f2 << -1, 0;
  ParamBox box;
  box.lo = v1(0.0);
  box.hi = v1(1.0);
  flat.pieces.push_back(ManifoldPiece::affine(0, v2(0, 0), f1, box));
  flat.pieces.push_back(ManifoldPiece::affine(1, v2(0, 0), f2, box));
  flat.pieces[0].boundary_faces = {1};
  flat.pieces[1].boundary_faces = {1};
  flat.density = Density::uniform(0.5);
  return flat;
}

Outcome edge_predictions() {
  Outcome out;
  double t = 1e-4;
  std::ostringstream detail;
  double worst = 0.0;
  for (double th : {kPi / 2, 3 * kPi / 4}) {
    SingularManifold m = build_builtin("glued_halflines", {{"theta", th}});
    AnnotatedCloud cloud = sample(m, 20000, SampleMode::Grid, 0);
    LaplacianConfig cfg;
    cfg.t = t;
    cfg.d = 1;
    ScalarField f = kinked_field(m, 0.7, 0.4);
    for (double r : {0.0, 0.5, 1.0}) {
      Vec q = v2(r * std::sqrt(t), 0.0);
      double L = apply_laplacian(
          cfg, cloud, f, {Query(ExternalQuery{q, 0, f.value(0, q)})})[0];
      PredictionReport pr = predict_at(m, f, q, 0, t);
      double rel =
          std::abs(std::sqrt(t) * L - pr.coefficient) / std::abs(pr.coefficient);
      worst = std::max(worst, rel);
      if (rel > 0.15) out.pass = false;
    }
  }
  // Flat gluing with a C1 field: the two-piece straight line.
  SingularManifold flat = flat_glued_line();
  AnnotatedCloud cloud = sample(flat, 20000, SampleMode::Grid, 0);
  LaplacianConfig cfg;
  cfg.t = t;
  cfg.d = 1;
  ScalarField fx = coordinate_field(0);
  double worst_flat = 0.0;
  for (double r : {0.0, 0.5, 1.0}) {
    Vec q = v2(r * std::sqrt(t), 0.0);
    double L = apply_laplacian(cfg, cloud, fx,
                               {Query(ExternalQuery{q, 0, q[0]})})[0];
    worst_flat = std::max(worst_flat, std::abs(std::sqrt(t) * L));
  }
  if (worst_flat > 0.05) out.pass = false;
  out.detail = fmt("worst relative error %.4f (cap 0.15); flat gluing |sqrt(t)L| <= %.2e (cap 0.05)",
                   worst, worst_flat);
  return out;
}

Outcome scaling_slopes() {
  Outcome out;
  SingularManifold m = build_builtin("three_intervals");
  AnnotatedCloud cloud = sample(m, 2500, SampleMode::Grid, 0);
  LaplacianConfig base;
  base.d = 1;
  ScalarField f = d1_field();
  std::vector<double> grid;
  for (int i = 0; i < 7; ++i)
    grid.push_back(1e-2 * std::pow(1e-3, i / 6.0));  // 1e-2 .. 1e-5

  auto find_point = [&](SingKind kind, bool left_of_origin) {
    int best = -1;
    double r = std::numeric_limits<double>::infinity();
    for (int i = 0; i < cloud.size(); ++i) {
      const auto& a = cloud.annotations[i];
      if (a.kind != kind) continue;
      if (kind == SingKind::Intersection) {
        if (a.r_ambient == 0.0) continue;
        if (left_of_origin && cloud.points(i, 0) >= 0.0) continue;
      }
      if (a.r_ambient < r) {
        r = a.r_ambient;
        best = i;
      }
    }
    return best;
  };

  std::ostringstream detail;
  struct Row {
    const char* name;
    int index;
    double lo, hi;
  };
  int interior = -1;
  {
    double r = -1;
    for (int i = 0; i < cloud.size(); ++i)
      if (cloud.annotations[i].r_ambient > r) {
        r = cloud.annotations[i].r_ambient;
        interior = i;
      }
  }
  std::vector<Row> rows = {
      {"boundary", find_point(SingKind::Boundary, false), -0.65, -0.35},
      {"intersection", find_point(SingKind::Intersection, true), -0.65, -0.35},
      {"edge", find_point(SingKind::Edge, false), -0.65, -0.35},
      {"interior", interior, -0.15, 0.15},
  };
  for (const auto& row : rows) {
    ScalingFit fit = scaling_fit(cloud, f, base, row.index, grid);
    bool ok = fit.slope >= row.lo && fit.slope <= row.hi;
    out.pass = out.pass && ok;
    detail << fmt("%s %.3f%s ", row.name, fit.slope, ok ? "" : "(!)");
  }
  out.detail = detail.str() + "(singular in [-0.65,-0.35], interior in [-0.15,0.15])";
  return out;
}

Outcome spectra_fold() {
  Outcome out;
  SingularManifold flat = build_builtin("rectangle");
  SingularManifold folded = build_builtin("folded_rectangle");

  FoldInvarianceReport full = fold_invariance(flat, folded, 6000, 1e-4, 100);
  double diff10 = spectrum_diff(full.smooth, full.folded, 10);
  double diff100 = spectrum_diff(full.smooth, full.folded, 100);
  double min_corr16 = 1.0;
  for (int i = 0; i < 16; ++i)
    min_corr16 = std::min(min_corr16, full.correlations[i]);

  EigensolveOptions desk_opts;
  desk_opts.force_iterative = true;
  FoldInvarianceReport desk =
      fold_invariance(flat, folded, 2000, 4e-4, 10, desk_opts);
  double min_corr10 = 1.0;
  for (double c : desk.correlations) min_corr10 = std::min(min_corr10, c);

  out.pass = diff10 <= 0.004 && diff100 <= 0.003 && desk.diff_k <= 0.01 &&
             min_corr10 >= 0.95 && min_corr16 >= 0.98;
  out.detail = fmt(
      "full n=6000: diff_10=%.5f (<=0.004) diff_100=%.5f (<=0.003) corr16>=%.4f; "
      "desk n=2000: diff_10=%.5f (<=0.01) corr10>=%.4f (>=0.95)",
      diff10, diff100, min_corr16, desk.diff_k, min_corr10);
  return out;
}

Outcome neumann() {
  Outcome out;
  SingularManifold m = build_builtin("interval");
  int n = 4000;
  double t = 1e-4;
  AnnotatedCloud cloud = sample(m, n, SampleMode::Grid, 0);
  LaplacianConfig cfg;
  cfg.t = t;
  cfg.d = 1;
  SpectrumReport rep = eigensolve(laplacian_matrix(cfg, cloud), 6);
  if (!rep.all_converged()) {
    out.pass = false;
    out.detail = "eigensolver did not converge";
    return out;
  }
  double min_corr = 1.0;
  for (int j = 1; j <= 5; ++j) {
    Vec ref(n);
    for (int i = 0; i < n; ++i) ref[i] = std::cos(j * kPi * cloud.points(i, 0));
    min_corr = std::min(min_corr, std::abs(rep.eigenvectors.col(j).dot(ref)) /
                                      (rep.eigenvectors.col(j).norm() * ref.norm()));
  }
  NeumannReport nr = neumann_check(rep, cloud, m, t, 6);
  double max_nd = 0.0;
  for (int j = 1; j <= 5; ++j)
    max_nd = std::max(max_nd, nr.modes[j].max_abs_normal_deriv);
  out.pass = min_corr >= 0.99 && max_nd <= 0.1;
  out.detail = fmt("cos-mode correlation >= %.5f (>=0.99); normalized boundary "
                   "derivative <= %.4f (<=0.1)",
                   min_corr, max_nd);
  return out;
}

Outcome concentration() {
  Outcome out;
  SingularManifold m = build_builtin("interval");
  ScalarField f = expression_field("x1^2", 1);
  ExternalQuery q{v1(0.5), 0, 0.25};
  double t = 0.05;
  // The worst-case Bernstein constants keep the bound clamped at 1 across
  // the default [0.1, 10] x stddev grid, which would make the comparison
  // vacuous. A pilot run measures the stddev, then the grid is extended
  // far enough into the tail that the bound genuinely drops below 1.
  DeviationReport pilot = deviation_mc(m, f, q, 1000, t, 200, 4242);
  std::vector<double> grid = pilot.eps_grid;
  grid.push_back(40 * pilot.stddev);
  grid.push_back(80 * pilot.stddev);
  DeviationReport small = deviation_mc(m, f, q, 1000, t, 200, 4242, grid);
  DeviationReport big = deviation_mc(m, f, q, 4000, t, 200, 4243, grid);

  int unclamped = 0;
  bool bound_ok = true;
  for (std::size_t i = 0; i < small.eps_grid.size(); ++i) {
    if (small.bound[i] < 1.0) {
      ++unclamped;
      if (small.exceed_frequency[i] >
          small.bound[i] + 3 * small.binomial_sd[i])
        bound_ok = false;
    }
  }
  for (std::size_t i = 0; i < big.eps_grid.size(); ++i) {
    if (big.bound[i] < 1.0) {
      ++unclamped;
      if (big.exceed_frequency[i] > big.bound[i] + 3 * big.binomial_sd[i])
        bound_ok = false;
    }
  }
  double ratio = big.stddev / small.stddev;
  bool sd_ok = ratio >= 0.4 && ratio <= 0.6;
  out.pass = bound_ok && sd_ok && unclamped >= 1;
  out.detail = fmt("sd(n=4e3)/sd(n=1e3)=%.3f (0.5 +-20%%); bound held on all %d "
                   "unclamped grid points (others clamp to 1)",
                   ratio, unclamped);
  return out;
}

Outcome detection() {
  Outcome out;
  SingularManifold m = build_builtin("three_intervals");
  AnnotatedCloud cloud = sample(m, 2500, SampleMode::Grid, 0);
  LaplacianConfig cfg;
  cfg.t = 1e-4;
  cfg.d = 1;
  DetectionReport rep = detect(cloud, d1_field(), cfg, 0.02, 5.0);
  out.pass = rep.has_ground_truth && rep.precision == 1.0;
  out.detail = fmt("flagged %zu points, precision %.3f against ground truth "
                   "within 5 sqrt(t)",
                   rep.flagged.size(), rep.precision);
  return out;
}

Outcome oracle_consistency() {
  Outcome out;
  std::ostringstream detail;
  double worst = 0.0;

  struct Fixture {
    SingularManifold m;
    ScalarField f;
    Vec x;
    int piece;
    double t;
  };
  std::vector<Fixture> fixtures;
  {
    SingularManifold mi = build_builtin("interval");
    fixtures.push_back({mi, expression_field("x1^2", 1), v1(0.5), 0, 1e-4});
    fixtures.push_back({mi, coordinate_field(0), v1(0.0), 0, 1e-3});
  }
  {
    SingularManifold mc = build_builtin("crossing_segments", {{"theta", kPi / 2}});
    fixtures.push_back({mc, coordinate_field(0), v2(0.01, 0.0), 0, 1e-4});
  }
  {
    SingularManifold mg = build_builtin("glued_halflines", {{"theta", 3 * kPi / 4}});
    fixtures.push_back({mg, kinked_field(mg, 0.7, 0.4), v2(0.005, 0.0), 0, 1e-4});
  }
  for (auto& fx : fixtures) {
    double base = quadrature_Lt(fx.m, fx.f, fx.x, fx.piece, fx.t, 4096);
    double fine = quadrature_Lt(fx.m, fx.f, fx.x, fx.piece, fx.t, 8192);
    double rel = std::abs(base - fine) / std::max(std::abs(fine), 1e-30);
    worst = std::max(worst, rel);
  }
  bool stable = worst < 1e-8;

  // Sign of the crossing closed form at r=1, theta=pi/2: it is
  // positive where the boundary and edge forms are negative; record the
  // empirical verdict.
  SingularManifold mc = build_builtin("crossing_segments", {{"theta", kPi / 2}});
  ScalarField f = coordinate_field(0);
  double t = 1e-4;
  PredictionReport pr = predict_at(mc, f, v2(std::sqrt(t), 0.0), 0, t);
  bool sign_confirmed = (pr.coefficient > 0) == (pr.oracle_value > 0);

  out.pass = stable;
  out.detail = fmt("resolution doubling moves fixtures by <= %.2e (cap 1e-8); "
                   "crossing sign at r=1, theta=pi/2: %s (stated +, empirical %c)",
                   worst, sign_confirmed ? "confirmed" : "FLAGGED",
                   pr.oracle_value > 0 ? '+' : '-');
  return out;
}

}  // namespace

int main() {
  std::vector<Check> checks = {
      {1, "constant-field nullity", 1.5, constant_field_nullity},
      {2, "interior limit", 10, interior_limit},
      {3, "boundary limit", 10, boundary_limit},
      {4, "intersection profile", 20, intersection_profile},
      {5, "edge predictions", 30, edge_predictions},
      {6, "scaling slopes", 60, scaling_slopes},
      {7, "fold-invariance spectra", 300, spectra_fold},
      {8, "Neumann eigenvector check", 30, neumann},
      {9, "concentration bound", 120, concentration},
      {10, "singularity detection", 60, detection},
      {11, "oracle self-consistency", 60, oracle_consistency},
  };

  int failures = 0;
  for (auto& c : checks) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    bool in_budget = secs < c.budget_s;
    bool pass = out.pass && in_budget;
    failures += pass ? 0 : 1;
    std::printf("[%2d] %-28s %s  (%.2fs of %gs budget) %s\n", c.id,
                c.name.c_str(), pass ? "PASS" : "FAIL", secs, c.budget_s,
                out.detail.c_str());
  }
  if (failures) std::printf("%d criterion(s) FAILED\n", failures);
  else std::printf("all %zu criteria passed\n", checks.size());
  return failures == 0 ? 0 : 1;
}
