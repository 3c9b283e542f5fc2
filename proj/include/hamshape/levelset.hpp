#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "hamshape/function.hpp"
#include "hamshape/geometry.hpp"

namespace hamshape {

struct TracerOptions;
struct TracedComponent;

// Value, gradient and second derivatives of g at one point. Row i of
// `hessian` is the gradient of the i-th gradient component; for FE-backed
// level sets it is the elementwise Jacobian of the recovered gradient and
// need not be symmetric.
struct LevelSample {
  double value = 0.0;
  Vec2 gradient = Vec2::Zero();
  Mat2 hessian = Mat2::Zero();
};

/// The design function g. Either an analytic formula (exact derivatives
/// through jets) or a finite element field whose gradient is the recovered
/// nodal-averaged gradient. Immutable and cheap to copy.
class LevelSet {
 public:
  LevelSet();  // analytic zero
  static LevelSet analytic(ScalarFunction f);
  static LevelSet from_field(ScalarField field, bool with_hessian = true);

  bool is_analytic() const;
  bool has_hessian() const;
  // Null for analytic level sets.
  const ScalarField* field() const;
  const ScalarFunction* function() const;

  // Throws a numerical Error when an FE-backed g is evaluated off its mesh;
  // throws if the Hessian is requested from a backend without one.
  LevelSample sample(const Vec2& p, bool need_hessian = false) const;
  double value(const Vec2& p) const;
  Vec2 gradient(const Vec2& p) const;
  Mat2 hessian(const Vec2& p) const;

  // Fast path for quadrature on `mesh`: reuses `loc` when g lives on the same
  // mesh, otherwise evaluates at the physical point.
  double value(const Mesh& mesh, const Location& loc) const;

  // Nodal values on `space` (identity when g already lives there).
  ScalarField interpolate(const SpacePtr& space) const;
  // Values at the vertices of `mesh`.
  std::vector<double> vertex_values(const Mesh& mesh) const;

  LevelSet plus(double lambda, const LevelSet& r, const SpacePtr& space) const;

 private:
  struct FieldBackend {
    ScalarField g;
    VectorField grad;
    bool with_hessian = true;
  };
  using Backend = std::variant<ScalarFunction, FieldBackend>;
  explicit LevelSet(std::shared_ptr<const Backend> backend);

  std::shared_ptr<const Backend> backend_;
};

/// Subdomain E with a fixed quadrature. Only disks (or nothing) are needed.
class ObservationRegion {
 public:
  ObservationRegion() = default;  // E = empty set
  // 24-point Gauss-Legendre in the radius times a uniform angular rule.
  static ObservationRegion disk(const Vec2& center, double radius, int n_angular = 96);

  bool empty() const { return radius_ <= 0.0; }
  const Vec2& center() const { return center_; }
  double radius() const { return radius_; }
  bool contains(const Vec2& p) const;
  // n equally spaced points on the boundary circle.
  std::vector<Vec2> rim(int n = 96) const;
  const std::vector<Vec2>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  Vec2 center_ = Vec2::Zero();
  double radius_ = 0.0;
  std::vector<Vec2> points_;
  std::vector<double> weights_;
};

// Sign-change roots of g on the mesh edges, bisected to |g| <= 1e-10, in
// edge order.
std::vector<Vec2> find_zero_crossings(const LevelSet& ls, const Mesh& mesh);

// One point per connected component of {g = 0}; roots within a tube of
// opts.tube_factor * h around an already traced curve are discarded.
std::vector<Vec2> find_boundary_seeds(const LevelSet& ls, const Mesh& mesh,
                                      const TracerOptions& opts);

using TriangleMask = std::vector<char>;

// Triangles with all three vertex values negative, flood-filled from the
// triangles that hold E's quadrature points.
TriangleMask classify_domain(const LevelSet& ls, const Mesh& mesh,
                             const ObservationRegion& anchor);
// Same, anchored at a point: its own triangle or a negative triangle whose
// centroid lies within h.
TriangleMask classify_domain(const LevelSet& ls, const Mesh& mesh, const Vec2& anchor);
// Every triangle with three negative vertex values, all components.
TriangleMask negative_triangles(const LevelSet& ls, const Mesh& mesh);
double mask_area(const Mesh& mesh, const TriangleMask& mask);

// Nodal replacement by g_E at dofs inside E.
ScalarField project_constraint(const ScalarField& g, const ObservationRegion& region,
                               const LevelSet& g_region);
LevelSet project_constraint(const LevelSet& g, const ObservationRegion& region,
                            const LevelSet& g_region, const SpacePtr& space);

struct AdmissibilityReport {
  double min_gradient_on_curve = 0.0;
  double min_on_box_boundary = 0.0;
  double max_on_region = 0.0;
  int component_count = 0;

  std::vector<Vec2> curve_samples;
  std::vector<Vec2> boundary_samples;
  std::vector<Vec2> region_samples;

  bool gradient_ok = false;
  bool boundary_ok = false;
  bool region_ok = false;
  bool admissible() const { return gradient_ok && boundary_ok && region_ok; }
};

AdmissibilityReport check_admissibility(const LevelSet& ls, const Mesh& mesh,
                                        const ObservationRegion& region, double m,
                                        const std::vector<TracedComponent>& components);

}  // namespace hamshape
