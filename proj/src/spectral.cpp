#include "laplab/spectral.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace laplab {

bool SpectrumReport::all_converged() const {
  return std::all_of(converged.begin(), converged.end(), [](bool b) { return b; });
}

namespace {

bool lex_less(const Vec& a, const Vec& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

void canonical_sign(Mat& vectors) {
  for (int c = 0; c < vectors.cols(); ++c) {
    int arg = 0;
    double best = 0.0;
    for (int i = 0; i < vectors.rows(); ++i) {
      double v = std::abs(vectors(i, c));
      if (v > best) {
        best = v;
        arg = i;
      }
    }
    if (vectors(arg, c) < 0) vectors.col(c) = -vectors.col(c);
  }
}

SpectrumReport assemble(const SpMat& L, std::vector<double> lambda, Mat X,
                        std::vector<bool> conv, int iterations, double normb,
                        bool dense) {
  int k = static_cast<int>(lambda.size());
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (lambda[a] != lambda[b]) return lambda[a] < lambda[b];
    return lex_less(X.col(a), X.col(b));  // deterministic tie-break
  });

  SpectrumReport rep;
  rep.eigenvalues.resize(k);
  rep.eigenvectors.resize(X.rows(), k);
  rep.converged.resize(k);
  rep.residuals.resize(k);
  rep.iterations = iterations;
  rep.norm_bound = normb;
  rep.dense_path = dense;
  for (int i = 0; i < k; ++i) {
    rep.eigenvalues[i] = lambda[order[i]];
    rep.eigenvectors.col(i) = X.col(order[i]);
    rep.converged[i] = conv[order[i]];
  }
  canonical_sign(rep.eigenvectors);
  for (int i = 0; i < k; ++i) {
    Vec x = rep.eigenvectors.col(i);
    rep.residuals[i] = (L * x - rep.eigenvalues[i] * x).norm();
  }
  return rep;
}

SpectrumReport dense_solve(const SpMat& L, int k, double tol, double normb) {
  Mat A(L);
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("dense eigensolver failed");
  std::vector<double> lambda(k);
  Mat X(L.rows(), k);
  std::vector<bool> conv(k, true);
  for (int i = 0; i < k; ++i) {
    lambda[i] = es.eigenvalues()[i];
    X.col(i) = es.eigenvectors().col(i);
  }
  auto rep = assemble(L, std::move(lambda), std::move(X), std::move(conv), 0,
                      normb, true);
  for (int i = 0; i < k; ++i)
    if (rep.residuals[i] > tol * std::max(normb, 1.0)) rep.converged[i] = false;
  return rep;
}

// Shift-invert Lanczos with full reorthogonalization and locking of
// converged pairs. Operates on (L + delta I)^{-1}; the bottom of L maps
// to dominant, well-separated eigenvalues of the inverse.
SpectrumReport lanczos_solve(const SpMat& L, int k, const EigensolveOptions& opts,
                             double normb) {
  int n = static_cast<int>(L.rows());
  double delta = std::max(1e-12, 1e-6 * normb);
  SpMat A = L;
  SpMat I(n, n);
  I.setIdentity();
  A += delta * I;
  Eigen::SimplicialLDLT<SpMat> chol(A);
  if (chol.info() != Eigen::Success)
    throw std::runtime_error("sparse factorization failed");

  int m = opts.max_subspace > 0 ? opts.max_subspace
                                : std::min(n - 1, std::max(2 * k + 40, 80));

  Mat locked(n, 0);
  std::vector<double> locked_vals;
  int iterations = 0;
  double tol = opts.tol * std::max(normb, 1.0);

  // Deterministic generic start vector.
  Vec start(n);
  for (int i = 0; i < n; ++i) start[i] = std::sin(1.0 + i);

  auto orth_against = [&](Vec& w, const Mat& basis, int cols) {
    if (cols == 0) return;
    w.noalias() -= basis.leftCols(cols) * (basis.leftCols(cols).transpose() * w);
  };

  for (int cycle = 0; cycle <= opts.max_restarts; ++cycle) {
    int want = k - static_cast<int>(locked_vals.size());
    if (want <= 0) break;

    Vec v = start;
    orth_against(v, locked, locked.cols());
    double vn = v.norm();
    if (vn < 1e-300) {
      // Start collapsed into the locked span; pick a fresh direction.
      v.setZero();
      v[cycle % n] = 1.0;
      orth_against(v, locked, locked.cols());
      vn = v.norm();
    }
    v /= vn;

    Mat V(n, m);
    std::vector<double> alpha, beta;
    V.col(0) = v;
    int built = 0;
    for (int j = 0; j < m; ++j) {
      Vec w = chol.solve(V.col(j));
      ++iterations;
      double a = V.col(j).dot(w);
      alpha.push_back(a);
      built = j + 1;
      // Full reorthogonalization (twice) against the basis and locked set.
      orth_against(w, V, j + 1);
      orth_against(w, locked, locked.cols());
      orth_against(w, V, j + 1);
      orth_against(w, locked, locked.cols());
      double b = w.norm();
      if (j + 1 < m) {
        if (b < 1e-13) break;  // invariant subspace exhausted
        beta.push_back(b);
        V.col(j + 1) = w / b;
      }
    }

    Mat T = Mat::Zero(built, built);
    for (int i = 0; i < built; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < built) {
        T(i, i + 1) = beta[i];
        T(i + 1, i) = beta[i];
      }
    }
    Eigen::SelfAdjointEigenSolver<Mat> esT(T);
    if (esT.info() != Eigen::Success)
      throw std::runtime_error("tridiagonal eigensolver failed");

    // Largest mu of the inverse operator = smallest lambda of L.
    bool restart_set = false;
    for (int idx = built - 1; idx >= 0 && want > 0; --idx) {
      double mu = esT.eigenvalues()[idx];
      if (!(mu > 0)) continue;
      Vec x = V.leftCols(built) * esT.eigenvectors().col(idx);
      double xn = x.norm();
      if (xn < 1e-300) continue;
      x /= xn;
      double lambda = 1.0 / mu - delta;
      double resid = (L * x - lambda * x).norm();
      if (resid <= tol) {
        locked.conservativeResize(n, locked.cols() + 1);
        locked.col(locked.cols() - 1) = x;
        locked_vals.push_back(lambda);
        --want;
      } else if (!restart_set) {
        start = x;
        restart_set = true;
      }
    }
    if (!restart_set) start = V.col(built - 1);
  }

  int have = static_cast<int>(locked_vals.size());
  std::vector<double> lambda(locked_vals);
  Mat X = locked;
  std::vector<bool> conv(have, true);
  // Partial result: flag the missing pairs rather than fail outright.
  while (static_cast<int>(lambda.size()) < k) {
    lambda.push_back(std::numeric_limits<double>::quiet_NaN());
    X.conservativeResize(n, X.cols() + 1);
    X.col(X.cols() - 1) = Vec::Zero(n);
    conv.push_back(false);
  }
  // NaNs sort unpredictably; park unconverged slots at the end by value.
  for (auto& lv : lambda)
    if (std::isnan(lv)) lv = std::numeric_limits<double>::infinity();
  auto rep = assemble(L, std::move(lambda), std::move(X), std::move(conv),
                      iterations, normb, false);
  for (int i = 0; i < rep.count(); ++i)
    if (std::isinf(rep.eigenvalues[i]))
      rep.eigenvalues[i] = std::numeric_limits<double>::quiet_NaN();
  return rep;
}

}  // namespace

SpectrumReport eigensolve(const SpMat& L, int k, const EigensolveOptions& opts) {
  int n = static_cast<int>(L.rows());
  if (k < 1 || k > n)
    throw std::invalid_argument("eigensolve needs 1 <= k <= n");
  double normb = matrix_norm_bound(L);
  bool dense = opts.force_dense || k == n ||
               (n <= opts.dense_threshold && !opts.force_iterative);
  if (dense) return dense_solve(L, k, opts.tol, normb);
  return lanczos_solve(L, k, opts, normb);
}

double spectrum_diff(const SpectrumReport& a, const SpectrumReport& b, int k) {
  if (a.count() < k + 1 || b.count() < k + 1)
    throw std::invalid_argument("spectrum_diff needs k+1 eigenpairs per report");
  for (int i = 1; i <= k; ++i)
    if (!a.converged[i] || !b.converged[i])
      throw std::invalid_argument("spectrum_diff: unconverged eigenpairs");
  Vec la = a.eigenvalues.segment(1, k);
  Vec lb = b.eigenvalues.segment(1, k);
  double denom = la.norm();
  if (denom == 0) return 0.0;
  return (la - lb).norm() / denom;
}

// ---------------------------------------------------------------------------
// Eigenvector comparison across matched clouds

std::vector<double> matched_correlations(const SpectrumReport& a,
                                         const SpectrumReport& b, int k,
                                         std::vector<int>* cluster_of_out) {
  if (a.count() < k + 1 || b.count() < k + 1)
    throw std::invalid_argument("matched_correlations needs k+1 modes");
  if (a.eigenvectors.rows() != b.eigenvectors.rows())
    throw std::invalid_argument("reports live on different clouds");

  // Ordering alignment: greedy best |dot| within a +-2 window.
  std::vector<int> match(k + 1, -1);
  std::vector<bool> used(k + 1, false);
  for (int i = 1; i <= k; ++i) {
    int best_j = -1;
    double best = -1.0;
    for (int j = std::max(1, i - 2); j <= std::min(k, i + 2); ++j) {
      if (used[j]) continue;
      double c = std::abs(a.eigenvectors.col(i).dot(b.eigenvectors.col(j)));
      if (c > best) {
        best = c;
        best_j = j;
      }
    }
    if (best_j < 0) {
      // Window exhausted near the spectrum edge; take the nearest free mode.
      for (int off = 0; off <= k && best_j < 0; ++off) {
        if (i - off >= 1 && !used[i - off]) best_j = i - off;
        else if (i + off <= k && !used[i + off]) best_j = i + off;
      }
    }
    match[i] = best_j;
    used[best_j] = true;
  }

  std::vector<double> corr(k + 1, 0.0);
  for (int i = 1; i <= k; ++i)
    corr[i] = std::abs(a.eigenvectors.col(i).dot(b.eigenvectors.col(match[i])));

  // Cluster detection: relative eigenvalue gap below 1e-6 marks true
  // multiplicity; unresolved rotations within nearly degenerate pairs are
  // rescued when the direct correlations come out poor.
  std::vector<int> cluster_of(k + 1, -1);
  auto rel_gap = [&](int i) {
    double scale = std::max({std::abs(a.eigenvalues[i]), std::abs(a.eigenvalues[i + 1]), 1e-30});
    return (a.eigenvalues[i + 1] - a.eigenvalues[i]) / scale;
  };
  int cluster_id = 0;
  int i = 1;
  while (i <= k) {
    int j = i;
    while (j < k && (rel_gap(j) < 1e-6 ||
                     (rel_gap(j) < 5e-3 && (corr[j] < 0.95 || corr[j + 1] < 0.95))))
      ++j;
    if (j > i) {
      // Principal angles between the two spans.
      int c = j - i + 1;
      Mat U(a.eigenvectors.rows(), c), W(a.eigenvectors.rows(), c);
      for (int q = 0; q < c; ++q) {
        U.col(q) = a.eigenvectors.col(i + q);
        W.col(q) = b.eigenvectors.col(match[i + q]);
      }
      Eigen::JacobiSVD<Mat> svd(U.transpose() * W);
      for (int q = 0; q < c; ++q) {
        corr[i + q] = std::min(1.0, svd.singularValues()[std::min(q, c - 1)]);
        cluster_of[i + q] = cluster_id;
      }
      ++cluster_id;
    }
    i = j + 1;
  }
  if (cluster_of_out) *cluster_of_out = cluster_of;
  return std::vector<double>(corr.begin() + 1, corr.end());
}

FoldInvarianceReport fold_invariance(const SingularManifold& m_smooth,
                                     const SingularManifold& m_folded, int n,
                                     double t, int k,
                                     const EigensolveOptions& opts) {
  AnnotatedCloud smooth = sample(m_smooth, n, SampleMode::Grid, 0);
  AnnotatedCloud folded = sample(m_folded, n, SampleMode::Grid, 0);
  bool matched = smooth.size() == folded.size() &&
                 smooth.params.cols() == folded.params.cols();
  if (matched && smooth.size() > 0)
    matched = (smooth.params - folded.params).cwiseAbs().maxCoeff() == 0.0;
  if (!matched)
    throw std::invalid_argument(
        "fold_invariance needs point-matched grids (same parameter lattice)");

  LaplacianConfig cfg;
  cfg.t = t;
  cfg.d = m_smooth.intrinsic_dim();

  FoldInvarianceReport rep;
  rep.smooth = eigensolve(laplacian_matrix(cfg, smooth), k + 1, opts);
  rep.folded = eigensolve(laplacian_matrix(cfg, folded), k + 1, opts);
  rep.diff_k = spectrum_diff(rep.smooth, rep.folded, k);
  rep.correlations = matched_correlations(rep.smooth, rep.folded, k, &rep.cluster_of);
  return rep;
}

// ---------------------------------------------------------------------------
// Neumann boundary statistics

namespace {

// Piecewise-linear interpolation of per-point values at an ambient target
// on a given piece. Exact lattice interpolation for curves (d = 1);
// nearest sample otherwise.
struct CloudInterpolator {
  const AnnotatedCloud& cloud;
  const SingularManifold& m;
  // Sorted (param, index) per 1-d piece.
  std::map<int, std::vector<std::pair<double, int>>> lines;

  CloudInterpolator(const AnnotatedCloud& c, const SingularManifold& mm)
      : cloud(c), m(mm) {
    if (cloud.intrinsic_dim == 1) {
      for (int i = 0; i < cloud.size(); ++i)
        lines[cloud.piece_of[i]].push_back({cloud.params(i, 0), i});
      for (auto& [pid, v] : lines) std::sort(v.begin(), v.end());
    }
  }

  double value_at(const Vec& values, int piece, const Vec& target) const {
    if (cloud.intrinsic_dim == 1) {
      const auto& line = lines.at(piece);
      auto u = m.piece(piece).invert_chart(target, 1e-6);
      if (!u) throw std::invalid_argument("probe point left the piece");
      double s = (*u)[0];
      auto it = std::lower_bound(line.begin(), line.end(),
                                 std::make_pair(s, -1));
      if (it == line.begin()) return values[line.front().second];
      if (it == line.end()) return values[line.back().second];
      auto [s1, i1] = *it;
      auto [s0, i0] = *(it - 1);
      double w = (s1 == s0) ? 0.0 : (s - s0) / (s1 - s0);
      return (1 - w) * values[i0] + w * values[i1];
    }
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int i = 0; i < cloud.size(); ++i) {
      if (cloud.piece_of[i] != piece) continue;
      double d = (cloud.point(i) - target).norm();
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    return values[best];
  }
};

std::vector<std::pair<Vec, std::pair<int, Vec>>> boundary_probes(
    const SingularManifold& m) {
  // (x0, (piece, inward)) per probe; three probes along extended loci.
  std::vector<std::pair<Vec, std::pair<int, Vec>>> probes;
  for (const auto& s : m.singularities) {
    if (s.kind != SingKind::Boundary) continue;
    int l = s.locus_dim();
    if (l == 0) {
      probes.push_back({s.anchor, {s.pieces[0], s.inward[0]}});
    } else {
      for (double f : {0.25, 0.5, 0.75}) {
        Vec sp(l);
        for (int j = 0; j < l; ++j)
          sp[j] = s.locus_box.lo[j] + f * s.locus_box.side(j);
        probes.push_back({Vec(s.anchor + s.basis * sp), {s.pieces[0], s.inward[0]}});
      }
    }
  }
  return probes;
}

double interior_gradient_scale(const Vec& values, const AnnotatedCloud& cloud,
                               double t) {
  double st = std::sqrt(t);
  double best = 0.0;
  if (cloud.intrinsic_dim == 1) {
    // Consecutive lattice differences on each piece, interior only.
    std::map<int, std::vector<std::pair<double, int>>> lines;
    for (int i = 0; i < cloud.size(); ++i)
      lines[cloud.piece_of[i]].push_back({cloud.params(i, 0), i});
    for (auto& [pid, v] : lines) {
      std::sort(v.begin(), v.end());
      for (std::size_t i = 1; i < v.size(); ++i) {
        int i0 = v[i - 1].second, i1 = v[i].second;
        if (!cloud.annotations.empty() &&
            (cloud.annotations[i0].r_ambient < 3 * st ||
             cloud.annotations[i1].r_ambient < 3 * st))
          continue;
        double ds = v[i].first - v[i - 1].first;
        if (ds <= 0) continue;
        best = std::max(best, std::abs(values[i1] - values[i0]) / ds);
      }
    }
    return best;
  }
  // Nearest-neighbor differences on a subsample.
  int n = cloud.size();
  int stride = std::max(1, n / 512);
  for (int i = 0; i < n; i += stride) {
    if (!cloud.annotations.empty() && cloud.annotations[i].r_ambient < 3 * st)
      continue;
    double bd = std::numeric_limits<double>::infinity();
    int bj = -1;
    for (int j = 0; j < n; ++j) {
      if (j == i || cloud.piece_of[j] != cloud.piece_of[i]) continue;
      double d = (cloud.point(j) - cloud.point(i)).norm();
      if (d < bd) {
        bd = d;
        bj = j;
      }
    }
    if (bj >= 0 && bd > 0)
      best = std::max(best, std::abs(values[bj] - values[i]) / bd);
  }
  return best;
}

double probe_normal_derivative(const CloudInterpolator& interp, const Vec& values,
                               const Vec& x0, int piece, const Vec& inward,
                               double t) {
  double st = std::sqrt(t);
  double phi0 = interp.value_at(values, piece, x0);
  double phi1 = interp.value_at(values, piece, Vec(x0 + st * inward));
  double phi2 = interp.value_at(values, piece, Vec(x0 + 2 * st * inward));
  double g1 = (phi1 - phi0) / st;
  double g2 = (phi2 - phi0) / (2 * st);
  return 2 * g1 - g2;  // linear extrapolation of the stencil to r = 0
}

}  // namespace

double normal_derivative_stat(const Vec& values, const AnnotatedCloud& cloud,
                              const SingularManifold& m, double t,
                              double* interior_scale) {
  CloudInterpolator interp(cloud, m);
  auto probes = boundary_probes(m);
  if (probes.empty())
    throw std::invalid_argument("manifold has no boundary singularities");
  double scale = interior_gradient_scale(values, cloud, t);
  if (interior_scale) *interior_scale = scale;
  if (scale <= 0) return 0.0;  // constant vector: derivative is exactly zero
  double worst = 0.0;
  for (auto& [x0, pn] : probes) {
    double est = probe_normal_derivative(interp, values, x0, pn.first, pn.second, t);
    worst = std::max(worst, std::abs(est) / scale);
  }
  return worst;
}

NeumannReport neumann_check(const SpectrumReport& report, const AnnotatedCloud& cloud,
                            const SingularManifold& m, double t, int k) {
  CloudInterpolator interp(cloud, m);
  auto probes = boundary_probes(m);
  if (probes.empty())
    throw std::invalid_argument("manifold has no boundary singularities");
  if (report.count() < k)
    throw std::invalid_argument("report has fewer than k modes");

  // Points within 3 sqrt(t) of the boundary are needed for the stencil.
  double st = std::sqrt(t);
  int near_boundary = 0;
  for (int i = 0; i < cloud.size(); ++i)
    if (!cloud.annotations.empty() && cloud.annotations[i].r_ambient <= 3 * st)
      ++near_boundary;
  if (near_boundary < 2)
    throw std::invalid_argument("too few points near the boundary for the stencil");

  NeumannReport rep;
  for (int mode = 0; mode < k; ++mode) {
    Vec values = report.eigenvectors.col(mode);
    double scale = interior_gradient_scale(values, cloud, t);
    if (mode == 0) rep.interior_gradient_scale = scale;
    NeumannReport::Mode ms;
    ms.index = mode;
    std::vector<double> stats;
    for (auto& [x0, pn] : probes) {
      double est =
          probe_normal_derivative(interp, values, x0, pn.first, pn.second, t);
      double norm = scale > 0 ? std::abs(est) / scale : 0.0;
      stats.push_back(norm);
    }
    std::sort(stats.begin(), stats.end());
    ms.max_abs_normal_deriv = stats.back();
    ms.median_abs_normal_deriv = stats[stats.size() / 2];
    rep.modes.push_back(ms);
  }
  return rep;
}

LocalityReport codim2_locality(int n, double t_lo, double t_mid, double t_hi,
                               int k, const EigensolveOptions& opts) {
  SingularManifold touching = build_builtin("plane_pair_r4", {{"separation", 0.0}});
  SingularManifold apart = build_builtin("plane_pair_r4", {{"separation", 3.0}});

  LocalityReport rep;
  rep.t_grid = {t_lo, t_mid, t_hi};
  std::sort(rep.t_grid.begin(), rep.t_grid.end(), std::greater<double>());
  double t_min = rep.t_grid.back();
  for (double t : rep.t_grid) {
    // Keep the lattice spacing a fixed multiple of sqrt(t): n is the count
    // at the smallest bandwidth, coarser grids suffice for larger ones.
    int nt = std::max(128, static_cast<int>(std::llround(n * (t_min / t))));
    AnnotatedCloud cloud_touch = sample(touching, nt, SampleMode::Grid, 0);
    AnnotatedCloud cloud_apart = sample(apart, nt, SampleMode::Grid, 0);
    LaplacianConfig cfg;
    cfg.t = t;
    cfg.d = touching.intrinsic_dim();
    auto sa = eigensolve(laplacian_matrix(cfg, cloud_touch), k + 1, opts);
    auto sb = eigensolve(laplacian_matrix(cfg, cloud_apart), k + 1, opts);
    rep.diff_k.push_back(spectrum_diff(sa, sb, k));
  }
  rep.decreasing = rep.diff_k.back() < rep.diff_k.front();
  return rep;
}

}  // namespace laplab
