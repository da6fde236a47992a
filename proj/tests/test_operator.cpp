#include <doctest.h>

#include "laplab/operator.hpp"

#include <numbers>
#include <random>

using namespace laplab;

namespace {

// Hand-rolled generator for property-style checks over random clouds.
AnnotatedCloud random_cloud(std::mt19937_64& rng, int n, int dim) {
  AnnotatedCloud cloud;
  cloud.ambient_dim = dim;
  cloud.intrinsic_dim = dim;
  cloud.points.resize(n, dim);
  cloud.params.resize(n, dim);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < dim; ++c) {
      cloud.points(i, c) = U(rng);
      cloud.params(i, c) = cloud.points(i, c);
    }
  cloud.piece_of.assign(n, 0);
  return cloud;
}

ScalarField ambient_poly() {
  ScalarField f;
  f.name = "poly";
  f.value = [](int, const Vec& x) {
    double v = 0;
    for (int i = 0; i < x.size(); ++i) v += (i + 1) * x[i] * x[i] - 0.3 * x[i];
    return v;
  };
  f.gradient = [](int, const Vec& x) {
    Vec g(x.size());
    for (int i = 0; i < x.size(); ++i) g[i] = 2 * (i + 1) * x[i] - 0.3;
    return g;
  };
  return f;
}

}  // namespace

TEST_CASE("kernel values and truncation contract") {
  LaplacianConfig cfg;
  cfg.t = 1.0;
  cfg.d = 1;
  Vec x(1), y(1);
  x << 0.0;
  y << 0.0;
  CHECK(kernel(cfg, x, y) == doctest::Approx(1.0));

  cfg.t = 0.25;
  y << 0.5;
  CHECK(kernel(cfg, x, y) == doctest::Approx(2.0 * std::exp(-1.0)));
  CHECK(kernel(cfg, x, y) == kernel(cfg, y, x));

  cfg.t = 0.01;
  cfg.d = 2;
  y << 1.0;  // distance 10 sqrt(t) > 8 sqrt(t)
  CHECK(kernel(cfg, x, y) == 0.0);

  cfg.truncation_radius = 4.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.truncation_radius = 8.0;
  cfg.t = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("constant fields are annihilated exactly") {
  std::mt19937_64 rng(11);
  AnnotatedCloud cloud = random_cloud(rng, 400, 2);
  LaplacianConfig cfg;
  cfg.t = 1e-2;
  cfg.d = 2;
  ScalarField f = constant_field(3.25);
  std::vector<Query> all;
  for (int i = 0; i < cloud.size(); ++i) all.push_back(i);
  for (double v : apply_laplacian(cfg, cloud, f, all)) CHECK(v == 0.0);
}

TEST_CASE("two-point Laplacian by hand") {
  AnnotatedCloud cloud;
  cloud.ambient_dim = 1;
  cloud.intrinsic_dim = 1;
  cloud.points.resize(2, 1);
  cloud.points << 0.0, 1.0;
  cloud.params = cloud.points;
  cloud.piece_of = {0, 0};
  LaplacianConfig cfg;
  cfg.t = 1.0;
  cfg.d = 1;
  ScalarField f = coordinate_field(0);
  // (1/(2*1)) * [K(0,0)*0 + K(0,1)*(0-1)] = -e^{-1}/2
  double v = apply_laplacian(cfg, cloud, f, {Query(0)})[0];
  CHECK(v == doctest::Approx(-0.5 * std::exp(-1.0)).epsilon(1e-12));

  SpMat L = laplacian_matrix(cfg, cloud);
  double w = std::exp(-1.0) / 2.0;  // 1/(n t^{3/2}) e^{-1} with n=2, t=1
  CHECK(L.coeff(0, 0) == doctest::Approx(w));
  CHECK(L.coeff(0, 1) == doctest::Approx(-w));
  CHECK(L.coeff(1, 0) == doctest::Approx(-w));
  CHECK(L.coeff(1, 1) == doctest::Approx(w));
}

TEST_CASE("matrix path agrees with the matrix-free path") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 6; ++rep) {
    int n = 40 + static_cast<int>(rng() % 200);
    int dim = 1 + static_cast<int>(rng() % 3);
    AnnotatedCloud cloud = random_cloud(rng, n, dim);
    LaplacianConfig cfg;
    cfg.t = 5e-3;
    cfg.d = dim;
    ScalarField f = ambient_poly();
    std::vector<double> fv(n);
    Vec fvec(n);
    for (int i = 0; i < n; ++i) {
      fv[i] = f.value(0, cloud.point(i));
      fvec[i] = fv[i];
    }
    SpMat L = laplacian_matrix(cfg, cloud);
    Vec by_matrix = L * fvec;
    std::vector<Query> all;
    for (int i = 0; i < n; ++i) all.push_back(i);
    std::vector<double> direct = apply_laplacian(cfg, cloud, f, all);
    double scale = by_matrix.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i)
      CHECK(std::abs(by_matrix[i] - direct[i]) <= 1e-12 * std::max(1.0, scale));
  }
}

TEST_CASE("Laplacian matrix invariants: symmetry, null space, PSD") {
  std::mt19937_64 rng(17);
  AnnotatedCloud cloud = random_cloud(rng, 300, 2);
  LaplacianConfig cfg;
  cfg.t = 1e-2;
  cfg.d = 2;
  SpMat L = laplacian_matrix(cfg, cloud);

  SpMat Lt = SpMat(L.transpose());
  double asym = 0.0;
  for (int k = 0; k < L.outerSize(); ++k)
    for (SpMat::InnerIterator it(L, k); it; ++it)
      asym = std::max(asym, std::abs(it.value() - Lt.coeff(it.row(), it.col())));
  CHECK(asym == 0.0);

  Vec ones = Vec::Ones(L.rows());
  double maxdeg = 0.0;
  for (int i = 0; i < L.rows(); ++i) maxdeg = std::max(maxdeg, L.coeff(i, i));
  CHECK((L * ones).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, maxdeg));

  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    Vec v(L.rows());
    for (int i = 0; i < v.size(); ++i) v[i] = U(rng);
    CHECK(v.dot(L * v) >= -1e-10 * v.squaredNorm() * maxdeg);
  }
}

TEST_CASE("row sums vanish relative to the degree") {
  std::mt19937_64 rng(23);
  AnnotatedCloud cloud = random_cloud(rng, 200, 1);
  LaplacianConfig cfg;
  cfg.t = 1e-3;
  cfg.d = 1;
  SpMat L = laplacian_matrix(cfg, cloud);
  for (int i = 0; i < L.rows(); ++i) {
    double row = 0.0, degree = L.coeff(i, i);
    for (SpMat::InnerIterator it(L, i); it; ++it) row += it.value();
    CHECK(std::abs(row) <= 1e-10 * std::max(1.0, degree));
  }
}

TEST_CASE("spatial hash equals brute force") {
  std::mt19937_64 rng(29);
  for (int rep = 0; rep < 5; ++rep) {
    int n = 100 + static_cast<int>(rng() % 300);
    AnnotatedCloud cloud = random_cloud(rng, n, 2);
    double cutoff = 0.15;
    NeighborIndex fast(cloud.points, cutoff);
    NeighborIndex brute(cloud.points, cutoff, true);
    for (int probe = 0; probe < 25; ++probe) {
      Vec x(2);
      x << std::uniform_real_distribution<double>(-0.2, 1.2)(rng),
          std::uniform_real_distribution<double>(-0.2, 1.2)(rng);
      CHECK(fast.query(x) == brute.query(x));
    }
  }
}

TEST_CASE("truncation radius 8 vs 12 changes nothing measurable") {
  std::mt19937_64 rng(31);
  AnnotatedCloud cloud = random_cloud(rng, 500, 1);
  ScalarField f = ambient_poly();
  LaplacianConfig cfg8;
  cfg8.t = 1e-3;
  cfg8.d = 1;
  LaplacianConfig cfg12 = cfg8;
  cfg12.truncation_radius = 12.0;
  std::vector<Query> queries;
  for (int i = 0; i < 50; ++i) queries.push_back(i * 10);
  auto a = apply_laplacian(cfg8, cloud, f, queries);
  auto b = apply_laplacian(cfg12, cloud, f, queries);
  for (std::size_t i = 0; i < queries.size(); ++i)
    CHECK(std::abs(a[i] - b[i]) <= 1e-10 * std::max(1.0, std::abs(b[i])));
}

TEST_CASE("results do not depend on the worker count") {
  std::mt19937_64 rng(37);
  AnnotatedCloud cloud = random_cloud(rng, 256, 2);
  ScalarField f = ambient_poly();
  LaplacianConfig cfg;
  cfg.t = 1e-2;
  cfg.d = 2;
  std::vector<Query> all;
  for (int i = 0; i < cloud.size(); ++i) all.push_back(i);
  auto seq = apply_laplacian(cfg, cloud, f, all, 1);
  auto par = apply_laplacian(cfg, cloud, f, all, 4);
  for (int i = 0; i < cloud.size(); ++i) CHECK(seq[i] == par[i]);
}

TEST_CASE("memory cap fails before allocation") {
  std::mt19937_64 rng(41);
  AnnotatedCloud cloud = random_cloud(rng, 500, 1);
  LaplacianConfig cfg;
  cfg.t = 1.0;  // everything is a neighbor
  cfg.d = 1;
  CHECK_THROWS_AS(laplacian_matrix(cfg, cloud, 1024), std::length_error);
}

TEST_CASE("external queries need their own field value") {
  AnnotatedCloud cloud;
  cloud.ambient_dim = 1;
  cloud.intrinsic_dim = 1;
  cloud.points.resize(2, 1);
  cloud.points << 0.0, 1.0;
  cloud.params = cloud.points;
  cloud.piece_of = {0, 0};
  LaplacianConfig cfg;
  cfg.t = 1.0;
  cfg.d = 1;
  ScalarField f = coordinate_field(0);
  ExternalQuery q;
  q.point = Vec(1);
  q.point << 0.5;
  q.piece = 0;
  q.fvalue = 0.5;
  double v = apply_laplacian(cfg, cloud, f, {Query(q)})[0];
  // Symmetric configuration: the two neighbor terms cancel.
  CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
}
