#pragma once

#include "laplab/analysis.hpp"

namespace laplab {

/// First-k eigenpairs of a graph Laplacian, ascending, with solver
/// diagnostics. Residual contract: |L v - lambda v| <= 1e-8 |L| per
/// converged pair.
struct SpectrumReport {
  Vec eigenvalues;   // k, ascending
  Mat eigenvectors;  // n x k, unit columns, canonical sign
  std::vector<bool> converged;
  Vec residuals;
  int iterations = 0;
  double norm_bound = 0.0;  // Gershgorin bound used for tolerances
  bool dense_path = false;

  int count() const { return static_cast<int>(eigenvalues.size()); }
  bool all_converged() const;
};

struct EigensolveOptions {
  double tol = 1e-9;           // residual tolerance relative to |L|
  int max_subspace = 0;        // 0: auto (2k + 40)
  int max_restarts = 8;
  int dense_threshold = 2000;  // n <= threshold uses the dense solver
  bool force_dense = false;
  bool force_iterative = false;
};

/// Smallest k eigenpairs. Dense (LAPACK-style) solve for small n; above
/// the threshold a shift-invert Lanczos with full reorthogonalization on
/// a sparse Cholesky factorization of L + delta I. Non-convergence after
/// the restart cap yields a partial report with per-pair flags.
SpectrumReport eigensolve(const SpMat& L, int k, const EigensolveOptions& opts = {});

/// Relative Euclidean difference of the first k nontrivial eigenvalues,
/// |l1 - l2| / |l1| (the near-zero leading eigenvalue is skipped).
double spectrum_diff(const SpectrumReport& a, const SpectrumReport& b, int k);

/// Boundary-derivative statistics of eigenvectors: one-sided differences
/// at offsets {sqrt(t), 2 sqrt(t)} along the inward normal, linearly
/// extrapolated to the boundary, normalized by the max interior gradient
/// estimate.
struct NeumannReport {
  struct Mode {
    int index = 0;
    double max_abs_normal_deriv = 0.0;     // normalized
    double median_abs_normal_deriv = 0.0;  // normalized
  };
  std::vector<Mode> modes;
  double interior_gradient_scale = 0.0;
};

NeumannReport neumann_check(const SpectrumReport& report, const AnnotatedCloud& cloud,
                            const SingularManifold& m, double t, int k);

/// Same statistic for an externally supplied vector of point values
/// (used to contrast injected Dirichlet-type modes).
double normal_derivative_stat(const Vec& values, const AnnotatedCloud& cloud,
                              const SingularManifold& m, double t,
                              double* interior_scale = nullptr);

/// Spectra of two intrinsically isometric manifolds on point-matched
/// grids, with per-mode eigenvector correlations after sign/ordering
/// alignment. Modes whose eigenvalue gap is below 1e-6 * lambda are
/// compared by subspace principal angles instead of vector correlation.
struct FoldInvarianceReport {
  SpectrumReport smooth;
  SpectrumReport folded;
  double diff_k = 0.0;
  std::vector<double> correlations;  // per nontrivial mode, in [0, 1]
  std::vector<int> cluster_of;       // degenerate-cluster id per mode, -1 if simple
};

FoldInvarianceReport fold_invariance(const SingularManifold& m_smooth,
                                     const SingularManifold& m_folded, int n,
                                     double t, int k,
                                     const EigensolveOptions& opts = {});

/// Mode-matched correlations between two reports on point-matched clouds
/// (exposed for tests; handles sign flips, ordering and clusters).
std::vector<double> matched_correlations(const SpectrumReport& a,
                                         const SpectrumReport& b, int k,
                                         std::vector<int>* cluster_of = nullptr);

/// diff_k between a union with a codimension >= 2 point contact and the
/// same pieces separated, across a bandwidth grid.
struct LocalityReport {
  std::vector<double> t_grid;
  std::vector<double> diff_k;
  bool decreasing = false;  // diff_k at the smallest t below the largest t
};

/// n is the sample count at the smallest bandwidth; coarser bandwidths use
/// proportionally fewer points so the lattice resolves sqrt(t) uniformly.
LocalityReport codim2_locality(int n, double t_lo, double t_mid, double t_hi,
                               int k, const EigensolveOptions& opts = {});

}  // namespace laplab
