#pragma once

#include "laplab/theory.hpp"

namespace laplab {

/// Least-squares fit of log|L_{n,t} f(x)| against log t.
struct ScalingFit {
  Query query;
  std::vector<double> t_grid;      // strictly decreasing
  std::vector<double> log_values;  // log |L| per t
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Applies the operator at `query` for every bandwidth in t_grid (strictly
/// decreasing, >= 4 entries) and fits slope/intercept/r^2 in log-log
/// coordinates. Throws if any |L| vanishes on the grid.
ScalingFit scaling_fit(const AnnotatedCloud& cloud, const ScalarField& field,
                       const LaplacianConfig& base, const Query& query,
                       const std::vector<double>& t_grid, int threads = 1);

/// Plain OLS on (log t, log |v|); shared with synthetic-data tests.
void fit_loglog(const std::vector<double>& t_grid, const std::vector<double>& values,
                ScalingFit& out);

struct DetectionReport {
  std::vector<double> scores;        // |L| normalized by median absolute score
  std::vector<double> raw_scores;    // |L|
  double quantile = 0.02;
  std::vector<int> flagged;          // top ceil(q n) by score, ties by index
  bool degenerate = false;           // all scores equal (e.g. constant field)
  // Confusion counts vs annotations, when the cloud has them. Ground
  // truth: r_ambient <= margin * sqrt(t).
  bool has_ground_truth = false;
  double margin_sqrt_t = 5.0;
  int true_positive = 0, false_positive = 0, false_negative = 0, true_negative = 0;
  double precision = 0.0, recall = 0.0;
};

/// Scores every cloud point by |L_{n,t} f| and flags the top quantile.
DetectionReport detect(const AnnotatedCloud& cloud, const ScalarField& field,
                       const LaplacianConfig& cfg, double q,
                       double margin_sqrt_t = 5.0, bool use_ground_truth = true,
                       int threads = 1);

enum class ProfileFamily { Boundary, Intersection, Edge };

std::string to_string(ProfileFamily f);

/// Nonlinear least-squares fit of the sqrt(t)-scaled operator profile
/// along an approach to a singular set, against the three shape families
///   Boundary:      C e^{-z^2}
///   Intersection:  A z e^{-C z^2}
///   Edge:          A z e^{-C z^2} + B e^{-C z^2}   (shared decay C).
struct ProfileFit {
  struct FamilyResult {
    ProfileFamily family;
    bool converged = false;
    double A = 0.0, B = 0.0, C = 0.0;
    double residual = std::numeric_limits<double>::infinity();  // RMS
    int iterations = 0;
  };
  std::vector<FamilyResult> families;
  ProfileFamily classified = ProfileFamily::Boundary;
};

/// Fit the families to (r, value) samples. Requires >= 8 samples with
/// distinct r in [0, 3]. Ties classify by Boundary < Intersection < Edge.
ProfileFit fit_profile(const std::vector<std::pair<double, double>>& samples);

/// Evaluate a fitted family at z.
double profile_eval(const ProfileFit::FamilyResult& fr, double z);

/// Samples sqrt(t) * L_{n,t} f along an approach line (external queries
/// with their r values in sqrt(t) units) and fits the families.
ProfileFit profile_fit(const AnnotatedCloud& cloud, const ScalarField& field,
                       const LaplacianConfig& cfg,
                       const std::vector<std::pair<ExternalQuery, double>>& approach,
                       int threads = 1);

/// Monte-Carlo deviation of the finite-sample operator from the
/// functional limit at one query point.
struct DeviationReport {
  double quadrature_value = 0.0;  // L_t f(x) by the oracle
  double mean = 0.0;
  double stddev = 0.0;
  int trials = 0;
  std::vector<double> eps_grid;
  std::vector<double> exceed_frequency;  // P_hat(|L_{n,t} - L_t| > eps)
  std::vector<double> bound;             // Bernstein bound per eps
  std::vector<double> binomial_sd;       // sd of the frequency estimate
  BoundParams params;
};

/// Draws `trials` independent clouds (per-trial seeds derived from seed),
/// evaluates L_{n,t} f at the external query each time and compares the
/// exceedance frequencies against the concentration bound. The eps grid
/// defaults to 8 log-spaced values in [0.1, 10] x empirical stddev.
DeviationReport deviation_mc(const SingularManifold& m, const ScalarField& field,
                             const ExternalQuery& query, int n, double t,
                             int trials, std::uint64_t seed,
                             std::vector<double> eps_grid = {}, int threads = 1);

}  // namespace laplab
