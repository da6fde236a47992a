#include "laplab/field.hpp"

#include <cmath>

namespace laplab {

double ScalarField::laplacian_on(const Mat& frame, int piece, const Vec& x) const {
  if (!hessian) throw std::invalid_argument("field has no Hessian");
  Mat H = hessian(piece, x);
  double tr = 0.0;
  for (int i = 0; i < frame.cols(); ++i) {
    Vec u = frame.col(i);
    tr += u.dot(H * u);
  }
  return tr;
}

ScalarField constant_field(double c) {
  ScalarField f;
  f.name = "const:" + std::to_string(c);
  f.value = [c](int, const Vec&) { return c; };
  f.gradient = [](int, const Vec& x) { return Vec(Vec::Zero(x.size())); };
  f.hessian = [](int, const Vec& x) { return Mat(Mat::Zero(x.size(), x.size())); };
  f.c1_across = true;
  return f;
}

ScalarField coordinate_field(int k) {
  ScalarField f;
  f.name = "coord:" + std::to_string(k + 1);
  f.value = [k](int, const Vec& x) { return x[k]; };
  f.gradient = [k](int, const Vec& x) {
    Vec g = Vec::Zero(x.size());
    g[k] = 1.0;
    return g;
  };
  f.hessian = [](int, const Vec& x) { return Mat(Mat::Zero(x.size(), x.size())); };
  f.c1_across = true;
  return f;
}

ScalarField d1_field() {
  ScalarField f;
  f.name = "d1field";
  f.value = [](int, const Vec& x) {
    double a = x[0] + 0.2;
    return a * a + x[1] * x[1];
  };
  f.gradient = [](int, const Vec& x) {
    Vec g = Vec::Zero(x.size());
    g[0] = 2.0 * (x[0] + 0.2);
    g[1] = 2.0 * x[1];
    return g;
  };
  f.hessian = [](int, const Vec& x) {
    Mat h = Mat::Zero(x.size(), x.size());
    h(0, 0) = 2.0;
    h(1, 1) = 2.0;
    return h;
  };
  f.c1_across = true;
  return f;
}

ScalarField kinked_field(const SingularManifold& m, double a1, double a2) {
  const SingularitySpec* edge = nullptr;
  for (const auto& s : m.singularities)
    if (s.kind == SingKind::Edge) {
      edge = &s;
      break;
    }
  if (!edge) throw std::invalid_argument("kinked_field needs an edge singularity");
  // <x - anchor, inward_i> is the distance from the (affine) locus along
  // the inward normal, for point and extended loci alike.
  Vec apex = edge->anchor;
  Vec n1 = edge->inward[0];
  Vec n2 = edge->inward[1];
  int p1 = edge->pieces[0], p2 = edge->pieces[1];
  ScalarField f;
  f.name = "kink";
  f.value = [=](int piece, const Vec& x) {
    if (piece == p1) return a1 * (x - apex).dot(n1);
    if (piece == p2) return a2 * (x - apex).dot(n2);
    throw std::invalid_argument("kinked_field: point off the glued pieces");
  };
  f.gradient = [=](int piece, const Vec&) -> Vec {
    if (piece == p1) return a1 * n1;
    if (piece == p2) return a2 * n2;
    throw std::invalid_argument("kinked_field: point off the glued pieces");
  };
  f.hessian = [](int, const Vec& x) { return Mat(Mat::Zero(x.size(), x.size())); };
  f.c1_across = false;
  return f;
}

ScalarField abs_arclength_field(const SingularManifold& m) {
  const SingularitySpec* cross = nullptr;
  for (const auto& s : m.singularities)
    if (s.kind == SingKind::Intersection) {
      cross = &s;
      break;
    }
  if (!cross) throw std::invalid_argument("abs_arclength_field needs an intersection");
  Vec x0 = cross->anchor;
  Vec u1 = cross->inward[0];
  int p1 = cross->pieces[0];
  ScalarField f;
  f.name = "abs1";
  f.value = [=](int piece, const Vec& x) {
    return piece == p1 ? std::abs((x - x0).dot(u1)) : 0.0;
  };
  f.gradient = [=](int piece, const Vec& x) -> Vec {
    if (piece != p1) return Vec::Zero(x.size());
    double s = (x - x0).dot(u1);
    return (s >= 0 ? 1.0 : -1.0) * u1;
  };
  f.hessian = [](int, const Vec& x) { return Mat(Mat::Zero(x.size(), x.size())); };
  f.c1_across = false;
  return f;
}

void check_field_continuity(const SingularManifold& m, const ScalarField& f,
                            double tol, int samples_per_locus) {
  for (const auto& s : m.singularities) {
    if (s.pieces.size() < 2) continue;
    int l = s.locus_dim();
    int count = l == 0 ? 1 : samples_per_locus;
    for (int i = 0; i < count; ++i) {
      Vec sp(l);
      for (int j = 0; j < l; ++j)
        sp[j] = s.locus_box.lo[j] +
                s.locus_box.side(j) * (count == 1 ? 0.5 : double(i) / (count - 1));
      Vec x = l == 0 ? s.anchor : Vec(s.anchor + s.basis * sp);
      double v0 = f.value(s.pieces[0], x);
      double v1 = f.value(s.pieces[1], x);
      if (std::abs(v0 - v1) > tol)
        throw std::invalid_argument("field is discontinuous across a singular set");
    }
  }
}

}  // namespace laplab
