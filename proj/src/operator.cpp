#include "laplab/operator.hpp"

#include "laplab/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace laplab {

void LaplacianConfig::validate() const {
  if (!(t > 0.0)) throw std::invalid_argument("bandwidth t must be positive");
  if (d < 1) throw std::invalid_argument("intrinsic dimension must be >= 1");
  if (truncation_radius < 5.0)
    throw std::invalid_argument("truncation radius below 5 sqrt(t) is unsound");
}

double kernel(const LaplacianConfig& cfg, const Vec& x, const Vec& y) {
  double d2 = (x - y).squaredNorm();
  double cut = cfg.cutoff();
  if (d2 > cut * cut) return 0.0;
  return std::pow(cfg.t, -0.5 * cfg.d) * std::exp(-d2 / cfg.t);
}

// ---------------------------------------------------------------------------
// NeighborIndex

NeighborIndex::NeighborIndex(const Mat& points, double cutoff, bool force_brute)
    : points_(points), cutoff_(cutoff) {
  int n = static_cast<int>(points.rows());
  int N = static_cast<int>(points.cols());
  brute_ = force_brute || N > 8 || n < 64;
  if (brute_) return;
  lo_ = points.colwise().minCoeff().transpose();
  inv_cell_ = 1.0 / cutoff_;
  cells_.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    cells_[key_of(cell_coords(points.row(i).transpose()))].push_back(i);
}

std::vector<std::int64_t> NeighborIndex::cell_coords(const Vec& x) const {
  std::vector<std::int64_t> c(x.size());
  for (int i = 0; i < x.size(); ++i)
    c[i] = static_cast<std::int64_t>(std::floor((x[i] - lo_[i]) * inv_cell_));
  return c;
}

std::uint64_t NeighborIndex::key_of(const std::vector<std::int64_t>& c) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::int64_t v : c)
    h = (h ^ static_cast<std::uint64_t>(v + (1LL << 32))) * 1099511628211ULL;
  return h;
}

std::vector<int> NeighborIndex::query(const Vec& x) const {
  int n = static_cast<int>(points_.rows());
  std::vector<int> out;
  if (brute_) {
    for (int i = 0; i < n; ++i)
      if ((points_.row(i).transpose() - x).norm() <= cutoff_) out.push_back(i);
    return out;
  }
  int N = static_cast<int>(points_.cols());
  // Integer cell ranges covering [x - cutoff, x + cutoff], padded by one
  // cell per side. The pad absorbs rounding of points that sit exactly on
  // a cell boundary (floor can land them either side of it).
  std::vector<std::int64_t> lo_cell(N), hi_cell(N), cur(N);
  for (int i = 0; i < N; ++i) {
    lo_cell[i] = static_cast<std::int64_t>(
                     std::floor((x[i] - cutoff_ - lo_[i]) * inv_cell_)) - 1;
    hi_cell[i] = static_cast<std::int64_t>(
                     std::floor((x[i] + cutoff_ - lo_[i]) * inv_cell_)) + 1;
    cur[i] = lo_cell[i];
  }
  while (true) {
    auto it = cells_.find(key_of(cur));
    if (it != cells_.end()) {
      for (int j : it->second)
        if ((points_.row(j).transpose() - x).norm() <= cutoff_) out.push_back(j);
    }
    int i = 0;
    for (; i < N; ++i) {
      if (++cur[i] <= hi_cell[i]) break;
      cur[i] = lo_cell[i];
    }
    if (i == N) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// apply_laplacian

namespace {

struct ResolvedQuery {
  Vec point;
  int piece;
  double fvalue;
};

ResolvedQuery resolve(const Query& q, const AnnotatedCloud& cloud,
                      const ScalarField& field) {
  if (std::holds_alternative<int>(q)) {
    int i = std::get<int>(q);
    if (i < 0 || i >= cloud.size())
      throw std::out_of_range("query index out of range");
    Vec x = cloud.point(i);
    return {x, cloud.piece_of[i], field.value(cloud.piece_of[i], x)};
  }
  const auto& e = std::get<ExternalQuery>(q);
  return {e.point, e.piece, e.fvalue};
}

}  // namespace

std::vector<double> apply_laplacian(const LaplacianConfig& cfg,
                                    const AnnotatedCloud& cloud,
                                    const ScalarField& field,
                                    const std::vector<Query>& queries,
                                    int threads) {
  cfg.validate();
  int n = cloud.size();
  if (n < 1) throw std::invalid_argument("cloud is empty");

  // Field values per cloud point, evaluated once.
  std::vector<double> fvals(n);
  for (int i = 0; i < n; ++i)
    fvals[i] = field.value(cloud.piece_of[i], cloud.point(i));

  NeighborIndex index(cloud.points, cfg.cutoff());
  double scale = 1.0 / (n * std::pow(cfg.t, 0.5 * cfg.d + 1.0));
  double cut2 = cfg.cutoff() * cfg.cutoff();

  std::vector<double> out(queries.size(), 0.0);
  parallel_for(static_cast<int>(queries.size()), threads, [&](int qi) {
    ResolvedQuery q = resolve(queries[qi], cloud, field);
    // Kahan-compensated sum; neighbor order is canonical (ascending).
    double sum = 0.0, comp = 0.0;
    for (int j : index.query(q.point)) {
      double d2 = (cloud.points.row(j).transpose() - q.point).squaredNorm();
      if (d2 > cut2) continue;
      double term = std::exp(-d2 / cfg.t) * (q.fvalue - fvals[j]);
      double y = term - comp;
      double s = sum + y;
      comp = (s - sum) - y;
      sum = s;
    }
    out[qi] = scale * sum;
  });
  return out;
}

// ---------------------------------------------------------------------------
// laplacian_matrix

SpMat laplacian_matrix(const LaplacianConfig& cfg, const AnnotatedCloud& cloud,
                       std::size_t mem_cap_bytes, int threads) {
  cfg.validate();
  int n = cloud.size();
  if (n < 2) throw std::invalid_argument("laplacian_matrix needs n >= 2");

  NeighborIndex index(cloud.points, cfg.cutoff());
  // Count nonzeros first so the memory estimate precedes any allocation.
  std::vector<std::vector<int>> neighbors(n);
  std::size_t nnz = n;  // diagonal
  parallel_for(n, threads, [&](int i) {
    neighbors[i] = index.query(cloud.point(i));
  });
  for (int i = 0; i < n; ++i) nnz += neighbors[i].size();
  std::size_t estimate = nnz * (sizeof(double) + sizeof(int)) +
                         static_cast<std::size_t>(n + 1) * sizeof(int);
  if (estimate > mem_cap_bytes)
    throw std::length_error("laplacian_matrix: estimated " +
                            std::to_string(estimate) +
                            " bytes exceeds the cap of " +
                            std::to_string(mem_cap_bytes));

  double scale = 1.0 / (n * std::pow(cfg.t, 0.5 * cfg.d + 1.0));
  double cut2 = cfg.cutoff() * cfg.cutoff();

  // Shared weight per (i, j) pair: evaluated once for i < j so L is
  // symmetric by construction.
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(nnz);
  std::vector<double> degree(n, 0.0);
  for (int i = 0; i < n; ++i) {
    Vec xi = cloud.point(i);
    for (int j : neighbors[i]) {
      if (j <= i) continue;
      double d2 = (cloud.points.row(j).transpose() - xi).squaredNorm();
      if (d2 > cut2) continue;
      double w = scale * std::exp(-d2 / cfg.t);
      trips.emplace_back(i, j, -w);
      trips.emplace_back(j, i, -w);
      degree[i] += w;
      degree[j] += w;
    }
  }
  for (int i = 0; i < n; ++i) trips.emplace_back(i, i, degree[i]);

  SpMat L(n, n);
  L.setFromTriplets(trips.begin(), trips.end());
  L.makeCompressed();
  return L;
}

double matrix_norm_bound(const SpMat& L) {
  double best = 0.0;
  for (int k = 0; k < L.outerSize(); ++k) {
    double row = 0.0;
    for (SpMat::InnerIterator it(L, k); it; ++it) row += std::abs(it.value());
    best = std::max(best, row);
  }
  return best;
}

}  // namespace laplab
