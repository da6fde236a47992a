#include "laplab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <unordered_map>

namespace laplab {

namespace {

constexpr double kPi = std::numbers::pi;

// splitmix64: derives independent stream seeds from (seed, index).
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform01(std::mt19937_64& rng) {
  // 53-bit mantissa draw, stable across standard library versions.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Vec make_vec(std::initializer_list<double> v) {
  Vec out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

bool ParamBox::contains(const Vec& u, double tol) const {
  if (u.size() != lo.size()) return false;
  for (int i = 0; i < dim(); ++i)
    if (u[i] < lo[i] - tol || u[i] > hi[i] + tol) return false;
  return true;
}

ManifoldPiece ManifoldPiece::affine(int id, const Vec& origin, const Mat& frame,
                                    const ParamBox& box) {
  ManifoldPiece p;
  p.id = id;
  p.intrinsic_dim = static_cast<int>(frame.cols());
  p.ambient_dim = static_cast<int>(frame.rows());
  p.box = box;
  p.is_affine = true;
  p.affine_origin = origin;
  p.affine_frame = frame;
  p.chart = [origin, frame](const Vec& u) -> Vec { return origin + frame * u; };
  p.jacobian_norm = [](const Vec&) { return 1.0; };
  // Orthonormal frames only; anything else needs its own jacobian_norm.
  Mat gram = frame.transpose() * frame;
  if (!gram.isApprox(Mat::Identity(frame.cols(), frame.cols()), 1e-12))
    throw std::invalid_argument("affine piece frame must be orthonormal");
  return p;
}

std::optional<Vec> ManifoldPiece::invert_chart(const Vec& x, double tol) const {
  if (is_affine) {
    Vec u = affine_frame.transpose() * (x - affine_origin);
    if (!box.contains(u, tol)) return std::nullopt;
    if ((chart(u) - x).norm() > tol) return std::nullopt;
    return u;
  }
  return std::nullopt;  // general charts must ship their own inverse
}

double ManifoldPiece::volume(int nodes_per_dim) const {
  if (is_affine) {
    double v = 1.0;
    for (int i = 0; i < box.dim(); ++i) v *= box.side(i);
    return v;
  }
  // Midpoint rule is plenty for a volume used only to apportion samples.
  int d = box.dim();
  std::vector<int> idx(d, 0);
  double sum = 0.0;
  bool done = false;
  while (!done) {
    Vec u(d);
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      double h = box.side(i) / nodes_per_dim;
      u[i] = box.lo[i] + (idx[i] + 0.5) * h;
      w *= h;
    }
    sum += jacobian_norm(u) * w;
    int i = 0;
    for (; i < d; ++i) {
      if (++idx[i] < nodes_per_dim) break;
      idx[i] = 0;
    }
    done = (i == d);
  }
  return sum;
}

std::string to_string(SingKind k) {
  switch (k) {
    case SingKind::Boundary: return "boundary";
    case SingKind::Intersection: return "intersection";
    case SingKind::Edge: return "edge";
  }
  return "?";
}

SingKind sing_kind_from_string(const std::string& s) {
  if (s == "boundary") return SingKind::Boundary;
  if (s == "intersection") return SingKind::Intersection;
  if (s == "edge") return SingKind::Edge;
  throw std::invalid_argument("unknown singularity kind: " + s);
}

std::string to_string(SampleMode m) {
  return m == SampleMode::Iid ? "iid" : "grid";
}

Vec SingularitySpec::nearest_point(const Vec& x) const {
  if (locus_dim() == 0) return anchor;
  Vec s = basis.transpose() * (x - anchor);
  for (int i = 0; i < locus_dim(); ++i)
    s[i] = std::clamp(s[i], locus_box.lo[i], locus_box.hi[i]);
  return anchor + basis * s;
}

double SingularitySpec::theta() const {
  if (inward.size() < 2) throw std::logic_error("theta needs two pieces");
  double c = std::clamp(inward[0].dot(inward[1]), -1.0, 1.0);
  return std::acos(c);
}

Density Density::uniform(double p) {
  Density d;
  d.value = [p](int, const Vec&) { return p; };
  d.lower = p;
  d.upper = p;
  return d;
}

const ManifoldPiece& SingularManifold::piece(int id) const {
  for (const auto& p : pieces)
    if (p.id == id) return p;
  throw std::out_of_range("no piece with id " + std::to_string(id));
}

void SingularManifold::validate() const {
  if (pieces.empty()) throw std::invalid_argument("manifold has no pieces");
  int d = pieces.front().intrinsic_dim;
  int N = pieces.front().ambient_dim;
  for (const auto& p : pieces) {
    if (p.intrinsic_dim != d)
      throw std::invalid_argument("mixed-dimension unions are not supported");
    if (p.ambient_dim != N)
      throw std::invalid_argument("pieces live in different ambient spaces");
    if (p.intrinsic_dim > p.ambient_dim)
      throw std::invalid_argument("intrinsic dimension exceeds ambient");
  }
  if (!(density.lower > 0.0) || !(density.upper >= density.lower) ||
      !std::isfinite(density.upper))
    throw std::invalid_argument("density bounds must satisfy 0 < a <= b < inf");
  for (const auto& s : singularities) {
    std::size_t need = s.kind == SingKind::Boundary ? 1 : 2;
    if (s.pieces.size() != need)
      throw std::invalid_argument("singularity references wrong piece count");
    if (s.inward.size() != s.pieces.size())
      throw std::invalid_argument("singularity missing inward directions");
    for (const auto& n : s.inward)
      if (std::abs(n.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("inward directions must be unit vectors");
    if (s.kind != SingKind::Boundary) {
      double th = s.theta();
      if (!(th > 0.0 && th < kPi))
        throw std::invalid_argument("theta must lie in (0, pi)");
    }
    // Placement: edges sit on boundary faces of both pieces, crossings in
    // the interior of both. Checked at the locus anchor for affine pieces.
    for (int pid : s.pieces) {
      const ManifoldPiece& pc = piece(pid);
      if (!pc.is_affine) continue;
      auto u = pc.invert_chart(s.anchor, 1e-8);
      if (!u)
        throw std::invalid_argument("singular locus does not touch piece " +
                                    std::to_string(pid));
      double face_dist = std::numeric_limits<double>::infinity();
      for (int i = 0; i < pc.box.dim(); ++i)
        face_dist = std::min({face_dist, (*u)[i] - pc.box.lo[i],
                              pc.box.hi[i] - (*u)[i]});
      if (s.kind == SingKind::Edge && face_dist > 1e-9)
        throw std::invalid_argument("edge locus must lie on a boundary face");
      if (s.kind == SingKind::Intersection && face_dist < 1e-9)
        throw std::invalid_argument(
            "intersection locus must lie in the pieces' interiors");
    }
  }
}

double SingularManifold::density_mass(int nodes_per_dim) const {
  // Composite midpoint; densities are smooth per piece.
  double total = 0.0;
  for (const auto& p : pieces) {
    int d = p.box.dim();
    std::vector<int> idx(d, 0);
    bool done = false;
    while (!done) {
      Vec u(d);
      double w = 1.0;
      for (int i = 0; i < d; ++i) {
        double h = p.box.side(i) / nodes_per_dim;
        u[i] = p.box.lo[i] + (idx[i] + 0.5) * h;
        w *= h;
      }
      Vec x = p.chart(u);
      total += density.value(p.id, x) * p.jacobian_norm(u) * w;
      int i = 0;
      for (; i < d; ++i) {
        if (++idx[i] < nodes_per_dim) break;
        idx[i] = 0;
      }
      done = (i == d);
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Annotation

namespace {

// Away-from-locus approach directions for a query x on `piece_id`.
// Boundary/Edge singularities carry constant inward normals (flat
// builtins); the intersection normal on the query's own piece follows the
// query side and the other piece's direction follows the projection of
// the query onto that piece's tangent.
void singularity_normals(const SingularitySpec& s, const Vec& x, int piece_id,
                         const Vec& x0, Annotation& out) {
  if (s.kind == SingKind::Boundary) {
    out.n1 = s.inward[0];
    out.n2.reset();
    out.theta.reset();
    return;
  }
  int local = (s.pieces[0] == piece_id) ? 0 : 1;
  int other = 1 - local;
  if (s.kind == SingKind::Edge) {
    out.n1 = s.inward[local];
    out.n2 = s.inward[other];
    out.theta = std::acos(std::clamp(out.n1.dot(*out.n2), -1.0, 1.0));
    return;
  }
  // Intersection: n1 along (x - x0) within the query piece, n2 along the
  // projection of (x - x0) onto the other piece's off-locus direction.
  Vec dx = x - x0;
  double dist = dx.norm();
  Vec n1 = (dist > 1e-14) ? Vec(dx / dist) : s.inward[local];
  const Vec& u_other = s.inward[other];
  double comp = n1.dot(u_other);
  Vec n2 = (std::abs(comp) > 1e-14) ? Vec((comp > 0 ? 1.0 : -1.0) * u_other)
                                    : u_other;
  out.n1 = n1;
  out.n2 = n2;
  out.theta = std::acos(std::clamp(n1.dot(n2), -1.0, 1.0));
}

}  // namespace

Annotation annotate(const SingularManifold& m, const Vec& x, int piece_id,
                    double horizon) {
  const ManifoldPiece& p = m.piece(piece_id);
  if (p.is_affine) {
    auto u = p.invert_chart(x);
    if (!u)
      throw std::invalid_argument("annotate: point does not lie on piece " +
                                  std::to_string(piece_id));
  }
  Annotation best;
  best.regular = true;
  for (std::size_t si = 0; si < m.singularities.size(); ++si) {
    const auto& s = m.singularities[si];
    if (std::find(s.pieces.begin(), s.pieces.end(), piece_id) == s.pieces.end())
      continue;
    Vec x0 = s.nearest_point(x);
    double r = (x - x0).norm();
    if (r < best.r_ambient) {
      best.kind = s.kind;
      best.singularity_index = static_cast<int>(si);
      best.x0 = x0;
      best.r_ambient = r;
      singularity_normals(s, x, piece_id, x0, best);
    }
  }
  best.regular = !(best.r_ambient <= horizon);
  return best;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

std::vector<int> lattice_counts(const ParamBox& box, int n) {
  // Tensor lattice with per-dimension counts proportional to side length.
  int d = box.dim();
  std::vector<int> counts(d, 1);
  if (d == 1) {
    counts[0] = std::max(1, n);
    return counts;
  }
  double volume = 1.0;
  for (int i = 0; i < d; ++i) volume *= box.side(i);
  double scale = std::pow(n / volume, 1.0 / d);
  long long prod = 1;
  for (int i = 0; i < d; ++i) {
    counts[i] = std::max(1, static_cast<int>(std::llround(box.side(i) * scale)));
    prod *= counts[i];
  }
  // Nudge the largest dimension until the product is as close as possible.
  auto product = [&]() {
    long long pr = 1;
    for (int c : counts) pr *= c;
    return pr;
  };
  while (product() < n) {
    int j = static_cast<int>(std::max_element(counts.begin(), counts.end()) -
                             counts.begin());
    ++counts[j];
  }
  while (product() > n) {
    int j = static_cast<int>(std::max_element(counts.begin(), counts.end()) -
                             counts.begin());
    if (counts[j] <= 1) break;
    long long without = product() / counts[j] * (counts[j] - 1);
    if (std::llabs(without - n) <= std::llabs(product() - n))
      --counts[j];
    else
      break;
  }
  return counts;
}

std::vector<Vec> piece_lattice(const ParamBox& box, int n) {
  std::vector<int> counts = lattice_counts(box, n);
  int d = box.dim();
  std::vector<Vec> pts;
  std::vector<int> idx(d, 0);
  bool done = false;
  while (!done) {
    Vec u(d);
    for (int i = 0; i < d; ++i) {
      int c = counts[i];
      u[i] = (c == 1) ? 0.5 * (box.lo[i] + box.hi[i])
                      : box.lo[i] + box.side(i) * idx[i] / (c - 1);
    }
    pts.push_back(u);
    int i = d - 1;  // row-major: last parameter fastest
    for (; i >= 0; --i) {
      if (++idx[i] < counts[i]) break;
      idx[i] = 0;
    }
    done = (i < 0);
  }
  return pts;
}

struct RawSample {
  int piece;
  Vec param;
  Vec point;
};

std::vector<RawSample> grid_samples(const SingularManifold& m, int n) {
  std::vector<RawSample> raw;
  if (m.grid_override) {
    for (auto& [pid, u] : m.grid_override(n))
      raw.push_back({pid, u, m.piece(pid).chart(u)});
    return raw;
  }
  std::vector<double> vol;
  double total = 0.0;
  for (const auto& p : m.pieces) {
    vol.push_back(p.volume());
    total += vol.back();
  }
  for (std::size_t k = 0; k < m.pieces.size(); ++k) {
    const auto& p = m.pieces[k];
    int nk = std::max(1, static_cast<int>(std::llround(n * vol[k] / total)));
    for (const Vec& u : piece_lattice(p.box, nk))
      raw.push_back({p.id, u, p.chart(u)});
  }
  // Glued faces share lattice sites (their charts agree there exactly);
  // keep the copy from the lowest piece id. Hash on quantized coordinates,
  // verify with the actual distance.
  std::unordered_map<std::uint64_t, std::vector<int>> buckets;
  auto key_of = [](const Vec& x) {
    std::uint64_t h = 1469598103934665603ULL;
    for (int i = 0; i < x.size(); ++i) {
      auto q = static_cast<std::int64_t>(std::llround(x[i] * 1e10));
      h = (h ^ static_cast<std::uint64_t>(q)) * 1099511628211ULL;
    }
    return h;
  };
  std::vector<RawSample> out;
  out.reserve(raw.size());
  for (auto& r : raw) {
    std::uint64_t key = key_of(r.point);
    bool dup = false;
    for (int j : buckets[key]) {
      if (out[j].piece != r.piece && (out[j].point - r.point).norm() < 1e-12) {
        dup = true;
        break;
      }
    }
    if (!dup) {
      buckets[key].push_back(static_cast<int>(out.size()));
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<RawSample> iid_samples(const SingularManifold& m, int n,
                                   std::uint64_t seed) {
  std::vector<double> mass;
  double total = 0.0;
  for (const auto& p : m.pieces) {
    // Piece mass under the density, midpoint quadrature.
    int nodes = 256;
    double s = 0.0;
    int d = p.box.dim();
    std::vector<int> idx(d, 0);
    bool done = false;
    while (!done) {
      Vec u(d);
      double w = 1.0;
      for (int i = 0; i < d; ++i) {
        double h = p.box.side(i) / nodes;
        u[i] = p.box.lo[i] + (idx[i] + 0.5) * h;
        w *= h;
      }
      s += m.density.value(p.id, p.chart(u)) * p.jacobian_norm(u) * w;
      int i = 0;
      for (; i < d; ++i) {
        if (++idx[i] < nodes) break;
        idx[i] = 0;
      }
      done = (i == d);
    }
    mass.push_back(s);
    total += s;
  }

  std::mt19937_64 rng(mix64(seed));
  std::vector<RawSample> raw;
  raw.reserve(n);
  // Rejection constant per piece: sup over a probe lattice of p * J, with
  // headroom. The density bound b caps p, so b * sup(J) also works; the
  // probe keeps acceptance rates reasonable for peaked densities.
  std::vector<double> sup(m.pieces.size(), 0.0);
  for (std::size_t k = 0; k < m.pieces.size(); ++k) {
    const auto& p = m.pieces[k];
    int d = p.box.dim();
    int per_dim = d == 1 ? 257 : (d == 2 ? 33 : 9);
    std::vector<int> idx(d, 0);
    bool done = false;
    while (!done) {
      Vec u(d);
      for (int i = 0; i < d; ++i)
        u[i] = p.box.lo[i] + p.box.side(i) * idx[i] / (per_dim - 1);
      sup[k] = std::max(sup[k], m.density.value(p.id, p.chart(u)) * p.jacobian_norm(u));
      int i = 0;
      for (; i < d; ++i) {
        if (++idx[i] < per_dim) break;
        idx[i] = 0;
      }
      done = (i == d);
    }
    sup[k] *= 1.5;
  }
  while (static_cast<int>(raw.size()) < n) {
    double pick = uniform01(rng) * total;
    std::size_t k = 0;
    double acc = mass[0];
    while (k + 1 < m.pieces.size() && pick > acc) acc += mass[++k];
    const auto& p = m.pieces[k];
    Vec u(p.box.dim());
    for (int j = 0; j < p.box.dim(); ++j)
      u[j] = p.box.lo[j] + p.box.side(j) * uniform01(rng);
    double w = m.density.value(p.id, p.chart(u)) * p.jacobian_norm(u);
    if (uniform01(rng) * sup[k] <= w) raw.push_back({p.id, u, p.chart(u)});
  }
  return raw;
}

}  // namespace

AnnotatedCloud sample(const SingularManifold& m, int n, SampleMode mode,
                      std::uint64_t seed, double horizon, bool with_annotations) {
  if (n < 2) throw std::invalid_argument("sample: need n >= 2");
  m.validate();
  std::vector<RawSample> raw =
      (mode == SampleMode::Grid) ? grid_samples(m, n) : iid_samples(m, n, seed);

  AnnotatedCloud cloud;
  cloud.seed = seed;
  cloud.mode = mode;
  cloud.ambient_dim = m.ambient_dim();
  cloud.intrinsic_dim = m.intrinsic_dim();
  cloud.horizon = horizon;
  int count = static_cast<int>(raw.size());
  cloud.points.resize(count, cloud.ambient_dim);
  cloud.params.resize(count, cloud.intrinsic_dim);
  cloud.piece_of.resize(count);
  for (int i = 0; i < count; ++i) {
    cloud.points.row(i) = raw[i].point.transpose();
    cloud.params.row(i) = raw[i].param.transpose();
    cloud.piece_of[i] = raw[i].piece;
  }
  if (with_annotations) {
    cloud.annotations.resize(count);
    for (int i = 0; i < count; ++i)
      cloud.annotations[i] = annotate(m, raw[i].point, raw[i].piece, horizon);
  }
  return cloud;
}

// ---------------------------------------------------------------------------
// Builtins

namespace {

double get_param(const std::map<std::string, double>& params,
                 const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void require_angle(double theta) {
  if (!(theta > 0.0 && theta < kPi))
    throw std::invalid_argument("theta must lie in (0, pi)");
}

SingularitySpec point_boundary(int piece, const Vec& at, const Vec& inward) {
  SingularitySpec s;
  s.kind = SingKind::Boundary;
  s.pieces = {piece};
  s.anchor = at;
  s.basis = Mat(at.size(), 0);
  s.locus_box.lo = Vec(0);
  s.locus_box.hi = Vec(0);
  s.inward = {inward};
  return s;
}

SingularManifold make_interval(double length) {
  if (!(length > 0)) throw std::invalid_argument("interval length must be positive");
  SingularManifold m;
  m.name = "interval";
  ParamBox box{make_vec({0.0}), make_vec({length})};
  Mat frame(1, 1);
  frame << 1.0;
  m.pieces.push_back(ManifoldPiece::affine(0, make_vec({0.0}), frame, box));
  m.pieces[0].boundary_faces = {0, 1};
  m.singularities.push_back(point_boundary(0, make_vec({0.0}), make_vec({1.0})));
  m.singularities.push_back(point_boundary(0, make_vec({length}), make_vec({-1.0})));
  m.density = Density::uniform(1.0 / length);
  return m;
}

// Segment piece in R^2 or R^3 from `a` toward unit `dir`, arclength box
// [0, len].
ManifoldPiece segment_piece(int id, const Vec& a, const Vec& dir, double len) {
  Mat frame(a.size(), 1);
  frame.col(0) = dir;
  ParamBox box{make_vec({0.0}), make_vec({len})};
  return ManifoldPiece::affine(id, a, frame, box);
}

SingularManifold make_crossing_segments(double theta, double halflen) {
  require_angle(theta);
  SingularManifold m;
  m.name = "crossing_segments";
  Vec u1 = make_vec({1.0, 0.0});
  Vec u2 = make_vec({std::cos(theta), std::sin(theta)});
  Vec o = make_vec({0.0, 0.0});
  // Parameterize each full segment from its negative end.
  m.pieces.push_back(segment_piece(0, -halflen * u1, u1, 2 * halflen));
  m.pieces.push_back(segment_piece(1, -halflen * u2, u2, 2 * halflen));
  m.pieces[0].boundary_faces = {0, 1};
  m.pieces[1].boundary_faces = {0, 1};

  SingularitySpec cross;
  cross.kind = SingKind::Intersection;
  cross.pieces = {0, 1};
  cross.anchor = o;
  cross.basis = Mat(2, 0);
  cross.locus_box.lo = Vec(0);
  cross.locus_box.hi = Vec(0);
  cross.inward = {u1, u2};
  m.singularities.push_back(cross);

  m.singularities.push_back(point_boundary(0, -halflen * u1, u1));
  m.singularities.push_back(point_boundary(0, halflen * u1, -u1));
  m.singularities.push_back(point_boundary(1, -halflen * u2, u2));
  m.singularities.push_back(point_boundary(1, halflen * u2, -u2));
  m.density = Density::uniform(1.0 / (4 * halflen));
  return m;
}

SingularManifold make_glued_halflines(double theta, double length) {
  require_angle(theta);
  SingularManifold m;
  m.name = "glued_halflines";
  Vec u1 = make_vec({1.0, 0.0});
  Vec u2 = make_vec({std::cos(theta), std::sin(theta)});
  Vec o = make_vec({0.0, 0.0});
  m.pieces.push_back(segment_piece(0, o, u1, length));
  m.pieces.push_back(segment_piece(1, o, u2, length));
  m.pieces[0].boundary_faces = {1};  // the apex face is glued, far end is boundary
  m.pieces[1].boundary_faces = {1};

  SingularitySpec edge;
  edge.kind = SingKind::Edge;
  edge.pieces = {0, 1};
  edge.anchor = o;
  edge.basis = Mat(2, 0);
  edge.locus_box.lo = Vec(0);
  edge.locus_box.hi = Vec(0);
  edge.inward = {u1, u2};
  m.singularities.push_back(edge);
  m.singularities.push_back(point_boundary(0, length * u1, -u1));
  m.singularities.push_back(point_boundary(1, length * u2, -u2));
  m.density = Density::uniform(1.0 / (2 * length));
  return m;
}

// Boundary spec along an affine face of a flat piece.
SingularitySpec face_boundary(int piece, const Vec& anchor, const Mat& basis,
                              const ParamBox& locus_box, const Vec& inward) {
  SingularitySpec s;
  s.kind = SingKind::Boundary;
  s.pieces = {piece};
  s.anchor = anchor;
  s.basis = basis;
  s.locus_box = locus_box;
  s.inward = {inward};
  return s;
}

SingularManifold make_glued_halfplanes(double theta, double length, double width) {
  require_angle(theta);
  SingularManifold m;
  m.name = "glued_halfplanes";
  // Shared edge along the y-axis segment [-width/2, width/2] at the origin.
  Vec e2 = make_vec({0.0, 1.0, 0.0});
  Vec dir1 = make_vec({1.0, 0.0, 0.0});
  Vec dir2 = make_vec({std::cos(theta), 0.0, std::sin(theta)});
  Vec o = make_vec({0.0, 0.0, 0.0});
  ParamBox box{make_vec({0.0, -width / 2}), make_vec({length, width / 2})};
  Mat f1(3, 2), f2(3, 2);
  f1.col(0) = dir1;
  f1.col(1) = e2;
  f2.col(0) = dir2;
  f2.col(1) = e2;
  m.pieces.push_back(ManifoldPiece::affine(0, o, f1, box));
  m.pieces.push_back(ManifoldPiece::affine(1, o, f2, box));
  m.pieces[0].boundary_faces = {1, 2, 3};
  m.pieces[1].boundary_faces = {1, 2, 3};

  Mat locus_basis(3, 1);
  locus_basis.col(0) = e2;
  ParamBox locus_box{make_vec({-width / 2}), make_vec({width / 2})};
  SingularitySpec edge;
  edge.kind = SingKind::Edge;
  edge.pieces = {0, 1};
  edge.anchor = o;
  edge.basis = locus_basis;
  edge.locus_box = locus_box;
  edge.inward = {dir1, dir2};
  m.singularities.push_back(edge);

  // Remaining faces are true boundary.
  for (int pid = 0; pid < 2; ++pid) {
    const Vec& dir = pid == 0 ? dir1 : dir2;
    m.singularities.push_back(face_boundary(pid, length * dir, locus_basis,
                                            locus_box, -dir));
    Mat along(3, 1);
    along.col(0) = dir;
    ParamBox along_box{make_vec({0.0}), make_vec({length})};
    m.singularities.push_back(face_boundary(pid, -(width / 2) * e2, along,
                                            along_box, e2));
    m.singularities.push_back(face_boundary(pid, (width / 2) * e2, along,
                                            along_box, -e2));
  }
  m.density = Density::uniform(1.0 / (2 * length * width));
  return m;
}

// The 0.6 x 1.0 sheet in R^3 with four boundary faces.
SingularManifold make_rectangle() {
  SingularManifold m;
  m.name = "rectangle";
  Vec o = make_vec({0.0, 0.0, 0.0});
  Mat frame(3, 2);
  frame.setZero();
  frame(0, 0) = 1.0;
  frame(1, 1) = 1.0;
  ParamBox box{make_vec({-0.3, -0.5}), make_vec({0.3, 0.5})};
  m.pieces.push_back(ManifoldPiece::affine(0, o, frame, box));
  m.pieces[0].boundary_faces = {0, 1, 2, 3};

  Vec ex = make_vec({1.0, 0.0, 0.0});
  Vec ey = make_vec({0.0, 1.0, 0.0});
  Mat bx(3, 1), by(3, 1);
  bx.col(0) = ex;
  by.col(0) = ey;
  ParamBox span_x{make_vec({-0.3}), make_vec({0.3})};
  ParamBox span_y{make_vec({-0.5}), make_vec({0.5})};
  m.singularities.push_back(face_boundary(0, make_vec({-0.3, 0.0, 0.0}), by, span_y, ex));
  m.singularities.push_back(face_boundary(0, make_vec({0.3, 0.0, 0.0}), by, span_y, -ex));
  m.singularities.push_back(face_boundary(0, make_vec({0.0, -0.5, 0.0}), bx, span_x, ey));
  m.singularities.push_back(face_boundary(0, make_vec({0.0, 0.5, 0.0}), bx, span_x, -ey));
  m.density = Density::uniform(1.0 / 0.6);
  return m;
}

// Rectangle with the y > 0 half rotated about the x-axis by fold_angle.
// Grid sampling reuses the flat sheet's lattice split at y = 0, so the
// folded cloud is point-matched (same order) to the flat one.
SingularManifold make_folded_rectangle(double fold_angle) {
  if (!(fold_angle >= 0.0 && fold_angle < kPi))
    throw std::invalid_argument("fold_angle must lie in [0, pi)");
  SingularManifold m;
  m.name = "folded_rectangle";
  double c = std::cos(fold_angle), s = std::sin(fold_angle);
  Vec o = make_vec({0.0, 0.0, 0.0});
  Vec ex = make_vec({1.0, 0.0, 0.0});
  Vec ey = make_vec({0.0, 1.0, 0.0});
  Vec ey_rot = make_vec({0.0, c, s});

  Mat f1(3, 2), f2(3, 2);
  f1.col(0) = ex;
  f1.col(1) = ey;
  f2.col(0) = ex;
  f2.col(1) = ey_rot;
  // Piece 0: y in [-0.5, 0]; piece 1: rotated y in [0, 0.5].
  ParamBox b1{make_vec({-0.3, -0.5}), make_vec({0.3, 0.0})};
  ParamBox b2{make_vec({-0.3, 0.0}), make_vec({0.3, 0.5})};
  auto p1 = ManifoldPiece::affine(0, o, f1, b1);
  auto p2 = ManifoldPiece::affine(1, o, f2, b2);
  p1.boundary_faces = {0, 1, 2};
  p2.boundary_faces = {0, 1, 3};
  m.pieces = {p1, p2};

  Mat bx(3, 1);
  bx.col(0) = ex;
  ParamBox span_x{make_vec({-0.3}), make_vec({0.3})};
  if (fold_angle > 0.0) {
    SingularitySpec edge;
    edge.kind = SingKind::Edge;
    edge.pieces = {0, 1};
    edge.anchor = o;
    edge.basis = bx;
    edge.locus_box = span_x;
    edge.inward = {-ey, ey_rot};
    m.singularities.push_back(edge);
  }
  Mat by1(3, 1), by2(3, 1);
  by1.col(0) = ey;
  by2.col(0) = ey_rot;
  ParamBox span_lo{make_vec({-0.5}), make_vec({0.0})};
  ParamBox span_hi{make_vec({0.0}), make_vec({0.5})};
  m.singularities.push_back(face_boundary(0, make_vec({-0.3, 0.0, 0.0}), by1, span_lo, ex));
  m.singularities.push_back(face_boundary(0, make_vec({0.3, 0.0, 0.0}), by1, span_lo, -ex));
  m.singularities.push_back(face_boundary(0, make_vec({0.0, -0.5, 0.0}), bx, span_x, ey));
  m.singularities.push_back(face_boundary(1, -0.3 * ex, by2, span_hi, ex));
  m.singularities.push_back(face_boundary(1, 0.3 * ex, by2, span_hi, -ex));
  m.singularities.push_back(face_boundary(1, 0.5 * ey_rot, bx, span_x, -ey_rot));
  m.density = Density::uniform(1.0 / 0.6);

  // Matched lattice: the flat sheet's grid, rows with y > 0 transported
  // through the fold chart. Same point order as the flat builtin.
  m.grid_override = [](int n) {
    ParamBox flat{make_vec({-0.3, -0.5}), make_vec({0.3, 0.5})};
    std::vector<std::pair<int, Vec>> out;
    for (const Vec& u : piece_lattice(flat, n))
      out.emplace_back(u[1] < 0.0 ? 0 : 1, u);
    return out;
  };
  return m;
}

SingularManifold make_three_intervals() {
  // Segment A: (-1,0) -> (1,0). Segment B through the origin at 60
  // degrees, interior crossing. Segment C glued to A's right end, corner
  // angle 3 pi / 4 between inward normals.
  SingularManifold m;
  m.name = "three_intervals";
  double thc = kPi / 3;
  Vec u1 = make_vec({1.0, 0.0});
  Vec u2 = make_vec({std::cos(thc), std::sin(thc)});
  double s2 = std::sqrt(2.0) / 2;
  Vec u3 = make_vec({s2, s2});
  Vec a0 = make_vec({-1.0, 0.0});
  Vec corner = make_vec({1.0, 0.0});
  double lenB = 1.0, lenC = 0.8;

  m.pieces.push_back(segment_piece(0, a0, u1, 2.0));
  m.pieces.push_back(segment_piece(1, -(lenB / 2) * u2, u2, lenB));
  m.pieces.push_back(segment_piece(2, corner, u3, lenC));
  m.pieces[0].boundary_faces = {0};
  m.pieces[1].boundary_faces = {0, 1};
  m.pieces[2].boundary_faces = {1};

  SingularitySpec cross;
  cross.kind = SingKind::Intersection;
  cross.pieces = {0, 1};
  cross.anchor = make_vec({0.0, 0.0});
  cross.basis = Mat(2, 0);
  cross.locus_box.lo = Vec(0);
  cross.locus_box.hi = Vec(0);
  cross.inward = {u1, u2};
  m.singularities.push_back(cross);

  SingularitySpec edge;
  edge.kind = SingKind::Edge;
  edge.pieces = {0, 2};
  edge.anchor = corner;
  edge.basis = Mat(2, 0);
  edge.locus_box.lo = Vec(0);
  edge.locus_box.hi = Vec(0);
  edge.inward = {-u1, u3};
  m.singularities.push_back(edge);

  m.singularities.push_back(point_boundary(0, a0, u1));
  m.singularities.push_back(point_boundary(1, -(lenB / 2) * u2, u2));
  m.singularities.push_back(point_boundary(1, (lenB / 2) * u2, -u2));
  m.singularities.push_back(point_boundary(2, corner + lenC * u3, -u3));
  m.density = Density::uniform(1.0 / (2.0 + lenB + lenC));
  return m;
}

SingularManifold make_plane_pair_r4(double separation) {
  SingularManifold m;
  m.name = "plane_pair_r4";
  Vec o = Vec::Zero(4);
  Mat f1(4, 2), f2(4, 2);
  f1.setZero();
  f2.setZero();
  f1(0, 0) = 1.0;
  f1(1, 1) = 1.0;
  f2(2, 0) = 1.0;
  f2(3, 1) = 1.0;
  ParamBox box{make_vec({-0.5, -0.5}), make_vec({0.5, 0.5})};
  Vec shift = Vec::Constant(4, separation);
  m.pieces.push_back(ManifoldPiece::affine(0, o, f1, box));
  m.pieces.push_back(ManifoldPiece::affine(1, shift, f2, box));
  m.pieces[0].boundary_faces = {0, 1, 2, 3};
  m.pieces[1].boundary_faces = {0, 1, 2, 3};
  if (separation == 0.0) {
    SingularitySpec touch;
    touch.kind = SingKind::Intersection;
    touch.pieces = {0, 1};
    touch.anchor = o;
    touch.basis = Mat(4, 0);
    touch.locus_box.lo = Vec(0);
    touch.locus_box.hi = Vec(0);
    Vec d1(4), d2(4);
    d1 << 1, 0, 0, 0;
    d2 << 0, 0, 1, 0;
    touch.inward = {d1, d2};
    m.singularities.push_back(touch);
  }
  m.density = Density::uniform(1.0 / 2.0);
  return m;
}

}  // namespace

SingularManifold build_builtin(const std::string& name,
                               const std::map<std::string, double>& params) {
  SingularManifold m;
  if (name == "interval") {
    m = make_interval(get_param(params, "length", 1.0));
  } else if (name == "crossing_segments") {
    m = make_crossing_segments(get_param(params, "theta", kPi / 2),
                               get_param(params, "halflen", 1.0));
  } else if (name == "glued_halflines") {
    m = make_glued_halflines(get_param(params, "theta", kPi / 2),
                             get_param(params, "length", 1.0));
  } else if (name == "glued_halfplanes") {
    m = make_glued_halfplanes(get_param(params, "theta", kPi / 2),
                              get_param(params, "length", 1.0),
                              get_param(params, "width", 1.0));
  } else if (name == "rectangle") {
    m = make_rectangle();
  } else if (name == "folded_rectangle") {
    m = make_folded_rectangle(get_param(params, "fold_angle", kPi / 4));
  } else if (name == "three_intervals") {
    m = make_three_intervals();
  } else if (name == "plane_pair_r4") {
    m = make_plane_pair_r4(get_param(params, "separation", 0.0));
  } else {
    throw std::invalid_argument("unknown builtin: " + name);
  }
  m.validate();
  return m;
}

std::vector<std::string> builtin_names() {
  return {"interval",        "crossing_segments", "glued_halflines",
          "glued_halfplanes", "rectangle",        "folded_rectangle",
          "three_intervals", "plane_pair_r4"};
}

}  // namespace laplab
