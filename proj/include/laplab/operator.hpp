#pragma once

#include "laplab/field.hpp"

#include <Eigen/Sparse>
#include <cmath>
#include <unordered_map>
#include <variant>

namespace laplab {

using SpMat = Eigen::SparseMatrix<double>;

/// Gaussian-kernel graph Laplacian configuration. The weight between two
/// points is w = K_t(x,y) / (n t) with K_t(x,y) = t^{-d/2} e^{-|x-y|^2/t};
/// weights vanish exactly beyond truncation_radius * sqrt(t).
struct LaplacianConfig {
  double t = 1e-2;
  int d = 1;
  double truncation_radius = 8.0;

  void validate() const;
  double cutoff() const { return truncation_radius * std::sqrt(t); }
};

/// K_t(x, y); exactly zero beyond the truncation radius.
double kernel(const LaplacianConfig& cfg, const Vec& x, const Vec& y);

/// Fixed-radius neighbor lookup over a point set. Uniform spatial hash
/// with cell size = cutoff for low ambient dimension, brute force above
/// (and available explicitly as a test oracle).
class NeighborIndex {
 public:
  NeighborIndex(const Mat& points, double cutoff, bool force_brute = false);

  /// Indices of points within the cutoff of x, ascending.
  std::vector<int> query(const Vec& x) const;
  bool brute() const { return brute_; }

 private:
  const Mat& points_;
  double cutoff_;
  bool brute_;
  double inv_cell_ = 0.0;
  Vec lo_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
  std::vector<std::int64_t> cell_coords(const Vec& x) const;
  static std::uint64_t key_of(const std::vector<std::int64_t>& c);
};

/// A query for apply_laplacian: either a cloud point by index (field value
/// evaluated on its piece) or an external point with its value supplied.
struct ExternalQuery {
  Vec point;
  int piece = 0;
  double fvalue = 0.0;
};
using Query = std::variant<int, ExternalQuery>;

/// L_{n,t} f at each query: (1/(n t)) sum_j K_t(x, X_j) (f(x) - f(X_j)),
/// Kahan-compensated, neighbor order canonical, parallel over queries.
std::vector<double> apply_laplacian(const LaplacianConfig& cfg,
                                    const AnnotatedCloud& cloud,
                                    const ScalarField& field,
                                    const std::vector<Query>& queries,
                                    int threads = 1);

/// The n x n unnormalized graph Laplacian L = D - W with W scaled by
/// 1/(n t^{d/2+1}). Fails before allocating if the nonzero estimate
/// exceeds mem_cap_bytes.
SpMat laplacian_matrix(const LaplacianConfig& cfg, const AnnotatedCloud& cloud,
                       std::size_t mem_cap_bytes = std::size_t(8) << 30,
                       int threads = 1);

/// Gershgorin bound on the spectral norm of L.
double matrix_norm_bound(const SpMat& L);

}  // namespace laplab
