#include <doctest.h>

#include "laplab/io.hpp"

#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>

using namespace laplab;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("laplab_io_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("cloud CSV round-trip preserves points and annotations") {
  SingularManifold m = build_builtin("crossing_segments");
  AnnotatedCloud cloud = sample(m, 64, SampleMode::Grid, 3, 0.05);
  TempDir dir;
  write_cloud_csv(cloud, dir.file("cloud.csv"));
  AnnotatedCloud back = read_cloud_csv(dir.file("cloud.csv"));

  REQUIRE(back.size() == cloud.size());
  CHECK(back.ambient_dim == cloud.ambient_dim);
  CHECK(back.intrinsic_dim == cloud.intrinsic_dim);
  CHECK(back.seed == cloud.seed);
  CHECK(back.mode == cloud.mode);
  CHECK((back.points - cloud.points).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.params - cloud.params).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < cloud.size(); ++i) {
    CHECK(back.piece_of[i] == cloud.piece_of[i]);
    CHECK(back.annotations[i].regular == cloud.annotations[i].regular);
    if (!cloud.annotations[i].regular) {
      CHECK(back.annotations[i].kind == cloud.annotations[i].kind);
      CHECK(back.annotations[i].r_ambient == cloud.annotations[i].r_ambient);
      CHECK((back.annotations[i].n1 - cloud.annotations[i].n1).norm() == 0.0);
      CHECK(back.annotations[i].theta.has_value() ==
            cloud.annotations[i].theta.has_value());
    }
  }
}

TEST_CASE("cloud JSON mirror round-trip") {
  SingularManifold m = build_builtin("interval");
  AnnotatedCloud cloud = sample(m, 32, SampleMode::Iid, 9, 0.1);
  json j = cloud_to_json(cloud);
  AnnotatedCloud back = cloud_from_json(j);
  CHECK((back.points - cloud.points).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.annotations.size() == cloud.annotations.size());
}

TEST_CASE("external CSV loads coordinates only") {
  TempDir dir;
  {
    std::ofstream out(dir.file("ext.csv"));
    out << "# ambient_dim=3 intrinsic_dim=2 seed=0 mode=iid\n";
    out << "0.5,0.25,0.125\n";
    out << "1,2,3\n";
  }
  AnnotatedCloud cloud = read_external_csv(dir.file("ext.csv"));
  REQUIRE(cloud.size() == 2);
  CHECK(cloud.ambient_dim == 3);
  CHECK(cloud.intrinsic_dim == 2);
  CHECK(cloud.points(1, 2) == 3.0);
  CHECK(cloud.annotations.empty());

  // Without a header the intrinsic dimension must be declared.
  {
    std::ofstream out(dir.file("raw.csv"));
    out << "0.5,0.25\n0.75,0.5\n";
  }
  CHECK_THROWS(read_external_csv(dir.file("raw.csv")));
  AnnotatedCloud declared = read_external_csv(dir.file("raw.csv"), 1);
  CHECK(declared.intrinsic_dim == 1);
  CHECK(declared.ambient_dim == 2);
}

TEST_CASE("matrix COO export carries the config header") {
  SingularManifold m = build_builtin("interval");
  AnnotatedCloud cloud = sample(m, 32, SampleMode::Grid, 0);
  LaplacianConfig cfg;
  cfg.t = 1e-2;
  cfg.d = 1;
  SpMat L = laplacian_matrix(cfg, cloud);
  TempDir dir;
  write_matrix_coo(L, cfg, dir.file("L.coo"));

  std::ifstream in(dir.file("L.coo"));
  std::string header;
  std::getline(in, header);
  json h = json::parse(header);
  CHECK(h["n"] == 32);
  CHECK(h["t"] == 1e-2);
  CHECK(h["d"] == 1);
  CHECK(h["truncation"] == 8.0);
  int lines = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  CHECK(lines == h["nnz"].get<int>());
}

TEST_CASE("doubles are printed with 17 significant digits") {
  std::string s = format_double(1.0 / 3.0);
  CHECK(s == "0.33333333333333331");
  CHECK(std::stod(format_double(0.1)) == 0.1);
}

TEST_CASE("report JSON shapes") {
  PredictionReport pr;
  pr.kind = LimitKind::Edge;
  pr.theta = 2.0;
  pr.components["alpha"] = 0.5;
  json j = prediction_to_json(pr);
  CHECK(j["kind"] == "edge");
  CHECK(j["components"]["alpha"] == 0.5);
  CHECK(j.contains("oracle_value"));
  CHECK(j.contains("relative_error"));

  DetectionReport dr;
  dr.flagged = {1, 2};
  dr.scores = {0.0, 1.0, 2.0};
  dr.raw_scores = dr.scores;
  json dj = detection_to_json(dr);
  CHECK(dj["flagged"].size() == 2);
}
