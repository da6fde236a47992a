#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace laplab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Axis-aligned box in parameter space.
struct ParamBox {
  Vec lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
  double side(int i) const { return hi[i] - lo[i]; }
  bool contains(const Vec& u, double tol = 1e-10) const;
};

/// One smooth piece of a singular manifold: a chart from a parameter box
/// into ambient space. All shipped builtins are isometric affine charts
/// (orthonormal frame, jacobian_norm == 1); the std::function interface
/// admits curved charts as well.
struct ManifoldPiece {
  int id = 0;
  int intrinsic_dim = 0;  // d
  int ambient_dim = 0;    // N
  ParamBox box;
  std::function<Vec(const Vec&)> chart;
  std::function<double(const Vec&)> jacobian_norm;
  // Parameter-box faces (2*axis + {0:lo,1:hi}) that are true manifold
  // boundary, as opposed to faces where another piece is glued on.
  std::vector<int> boundary_faces;

  // Affine fast path: chart(u) = origin + frame * u with orthonormal frame.
  bool is_affine = false;
  Vec affine_origin;
  Mat affine_frame;  // N x d

  std::optional<Vec> invert_chart(const Vec& x, double tol = 1e-8) const;
  double volume(int nodes_per_dim = 64) const;

  static ManifoldPiece affine(int id, const Vec& origin, const Mat& frame,
                              const ParamBox& box);
};

enum class SingKind { Boundary, Intersection, Edge };

std::string to_string(SingKind k);
SingKind sing_kind_from_string(const std::string& s);

/// A singular set shared by one (Boundary) or two (Intersection/Edge)
/// pieces. Loci are affine: { anchor + basis * s : s in locus_box } with
/// orthonormal basis columns; locus_dim == 0 means a single point.
struct SingularitySpec {
  SingKind kind = SingKind::Boundary;
  std::vector<int> pieces;
  Vec anchor;
  Mat basis;  // N x l, orthonormal columns (l may be 0)
  ParamBox locus_box;
  // Unit reference directions per piece at the locus, pointing away from
  // the locus into the piece. Boundary/Edge: the inward boundary normal.
  // Intersection: the piece tangent direction orthogonal to the locus
  // (orientation reference; the annotation flips its sign per query side).
  std::vector<Vec> inward;

  int locus_dim() const { return static_cast<int>(basis.cols()); }
  /// Closest locus point to x (exact for affine loci).
  Vec nearest_point(const Vec& x) const;
  double theta() const;  // angle between inward[0] and inward[1]
};

/// Nearest-singularity record for a sampled or queried point.
struct Annotation {
  bool regular = true;
  SingKind kind = SingKind::Boundary;
  int singularity_index = -1;
  Vec x0;
  double r_ambient = std::numeric_limits<double>::infinity();
  Vec n1;
  std::optional<Vec> n2;
  std::optional<double> theta;
};

/// Piecewise-smooth probability density with per-piece expressions and
/// global bounds 0 < a <= p <= b.
struct Density {
  std::function<double(int piece, const Vec&)> value;
  double lower = 1.0;  // a
  double upper = 1.0;  // b

  static Density uniform(double p);
};

enum class SampleMode { Iid, Grid };

std::string to_string(SampleMode m);

struct AnnotatedCloud;

/// A union of smooth pieces plus the description of how they meet.
/// Immutable after construction; sampling and annotation are pure.
struct SingularManifold {
  std::string name;
  std::vector<ManifoldPiece> pieces;
  std::vector<SingularitySpec> singularities;
  Density density;
  // Optional custom grid lattice (piece index, parameter point) used by
  // builtins that need point-matched grids across related manifolds.
  std::function<std::vector<std::pair<int, Vec>>(int n)> grid_override;

  int intrinsic_dim() const { return pieces.empty() ? 0 : pieces.front().intrinsic_dim; }
  int ambient_dim() const { return pieces.empty() ? 0 : pieces.front().ambient_dim; }
  const ManifoldPiece& piece(int id) const;

  void validate() const;
  /// Quadrature of the density over all pieces (should be 1 within 1e-6).
  double density_mass(int nodes_per_dim = 128) const;
};

struct AnnotatedCloud {
  Mat points;   // n x N
  Mat params;   // n x d (chart parameters, kept for reconstruction checks)
  std::vector<int> piece_of;
  std::vector<Annotation> annotations;
  std::uint64_t seed = 0;
  SampleMode mode = SampleMode::Grid;
  int ambient_dim = 0;
  int intrinsic_dim = 0;
  double horizon = std::numeric_limits<double>::infinity();

  int size() const { return static_cast<int>(points.rows()); }
  Vec point(int i) const { return points.row(i).transpose(); }
};

/// Nearest singular set across all specs touching `piece`; regular=true
/// if every singular set is farther than `horizon`.
Annotation annotate(const SingularManifold& m, const Vec& x, int piece,
                    double horizon = std::numeric_limits<double>::infinity());

/// Sample n points (iid from the density, or a per-piece uniform lattice).
/// Grid mode distributes counts across pieces proportional to d-volume,
/// includes boundary lattice sites, and drops coincident duplicates on
/// glued faces (lowest piece id keeps the point), so the returned count
/// can differ slightly from n. Deterministic given (m, n, mode, seed).
AnnotatedCloud sample(const SingularManifold& m, int n, SampleMode mode,
                      std::uint64_t seed,
                      double horizon = std::numeric_limits<double>::infinity(),
                      bool with_annotations = true);

/// Builtin geometries. Parameters are keyed by name; unknown names throw.
///   interval            length (1)
///   crossing_segments   theta, halflen (1)
///   glued_halflines     theta, length (1)
///   glued_halfplanes    theta, length (1), width (1)
///   rectangle           (none; the 0.6 x 1.0 sheet in R^3)
///   folded_rectangle    fold_angle (pi/4); 0 folds nothing (smooth gluing)
///   three_intervals     (none; segments with boundary, crossing and corner)
///   plane_pair_r4       separation (0); two 2-planes in R^4, point contact
SingularManifold build_builtin(const std::string& name,
                               const std::map<std::string, double>& params = {});

std::vector<std::string> builtin_names();

}  // namespace laplab
