#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "hamshape/function.hpp"

namespace hamshape {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Barycentric = std::array<double, 3>;

struct Box {
  double xmin = 0.0;
  double xmax = 0.0;
  double ymin = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  bool contains(const Vec2& p, double tol = 0.0) const {
    return p.x() >= xmin - tol && p.x() <= xmax + tol && p.y() >= ymin - tol &&
           p.y() <= ymax + tol;
  }
};

// kDiagonal splits every cell along its (xmin,ymin)-(xmax,ymax) diagonal into
// two triangles; kCrossed adds the cell centre and produces four.
enum class MeshPattern { kDiagonal, kCrossed };

// A point expressed as (triangle, barycentric coordinates).
struct Location {
  int triangle = -1;
  Barycentric bary{};
};

/// Conforming triangulation with counter-clockwise triangles. Immutable after
/// construction; owns a uniform bin grid for point location.
class Mesh {
 public:
  Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const Vec2& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }
  const std::array<int, 3>& triangle(int t) const { return triangles_[static_cast<std::size_t>(t)]; }

  // Unique undirected edges (a < b). Local edge k of a triangle joins its
  // local vertices k and (k+1) mod 3.
  const std::vector<std::array<int, 2>>& edges() const { return edges_; }
  const std::array<int, 3>& triangle_edges(int t) const { return tri_edges_[static_cast<std::size_t>(t)]; }
  // Triangle across local edge k of t, or -1 on the boundary.
  int neighbor(int t, int k) const { return neighbors_[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)]; }

  // Oriented so that the mesh lies to the left; the outward normal of
  // (a, b) is (b - a) rotated clockwise.
  const std::vector<std::array<int, 2>>& boundary_edges() const { return boundary_edges_; }

  const Box& bounds() const { return bounds_; }
  // Longest edge length.
  double h() const { return h_; }
  double area(int t) const { return areas_[static_cast<std::size_t>(t)]; }
  const std::array<Vec2, 3>& barycentric_gradients(int t) const {
    return bary_grads_[static_cast<std::size_t>(t)];
  }
  Vec2 centroid(int t) const;
  Vec2 point(int t, const Barycentric& bary) const;
  Barycentric barycentric(int t, const Vec2& p) const;

  // First triangle (lowest index) containing p, or nullopt outside the mesh.
  std::optional<Location> locate(const Vec2& p) const;
  // Candidate triangles whose bins overlap the square of half-width radius
  // around p, sorted ascending.
  std::vector<int> triangles_near(const Vec2& p, double radius) const;

 private:
  void build_topology();
  void build_locator();
  std::pair<int, int> bin_of(const Vec2& p) const;

  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 3>> tri_edges_;
  std::vector<std::array<int, 3>> neighbors_;
  std::vector<std::array<int, 2>> boundary_edges_;
  std::vector<double> areas_;
  std::vector<std::array<Vec2, 3>> bary_grads_;
  Box bounds_;
  double h_ = 0.0;

  int bins_x_ = 1;
  int bins_y_ = 1;
  std::vector<int> bin_start_;
  std::vector<int> bin_triangles_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

// Structured mesh of `bounds` with n_per_side cells per side: 2 n^2 triangles
// for kDiagonal, 4 n^2 for kCrossed.
MeshPtr build_rectangle_mesh(const Box& bounds, int n_per_side,
                             MeshPattern pattern = MeshPattern::kDiagonal);

// Symmetric triangle rules in barycentric coordinates; weights sum to one.
struct TriangleQuadrature {
  std::vector<Barycentric> points;
  std::vector<double> weights;

  static const TriangleQuadrature& degree2();  // 3 points
  static const TriangleQuadrature& degree5();  // 7 points
};

constexpr int kMaxLocalDofs = 6;
using ShapeValues = std::array<double, kMaxLocalDofs>;
using ShapeGradients = std::array<Vec2, kMaxLocalDofs>;

/// Continuous Lagrange space of degree 1 or 2. P2 numbering: vertices first,
/// then one dof per edge midpoint; local order v0 v1 v2 m01 m12 m20.
class FiniteElementSpace {
 public:
  FiniteElementSpace(MeshPtr mesh, int degree);

  const Mesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(dof_coords_.size()); }
  int local_size() const { return local_size_; }

  std::span<const int> element_dofs(int t) const {
    return {element_dofs_.data() + static_cast<std::ptrdiff_t>(t) * local_size_,
            static_cast<std::size_t>(local_size_)};
  }
  const std::vector<Vec2>& dof_coordinates() const { return dof_coords_; }
  const std::vector<int>& boundary_dofs() const { return boundary_dofs_; }
  bool on_boundary(int dof) const { return on_boundary_[static_cast<std::size_t>(dof)] != 0; }

  void shape_values(const Barycentric& bary, ShapeValues& out) const;
  void shape_gradients(int t, const Barycentric& bary, ShapeGradients& out) const;

  // Rule exact for polynomials of degree 2 * degree().
  const TriangleQuadrature& quadrature() const;

  // Linear maps from coefficients to the nodal-averaged gradient components.
  const SparseMatrix& recovery_x() const { return recovery_x_; }
  const SparseMatrix& recovery_y() const { return recovery_y_; }

  Vector interpolate(const ScalarFunction& f) const;

 private:
  void build_recovery();

  MeshPtr mesh_;
  int degree_;
  int local_size_;
  std::vector<int> element_dofs_;
  std::vector<Vec2> dof_coords_;
  std::vector<int> boundary_dofs_;
  std::vector<char> on_boundary_;
  SparseMatrix recovery_x_;
  SparseMatrix recovery_y_;
};

using SpacePtr = std::shared_ptr<const FiniteElementSpace>;

/// Finite element function: a space plus one coefficient per dof.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(SpacePtr space, Vector coefficients);

  static ScalarField zero(SpacePtr space);
  static ScalarField interpolate(SpacePtr space, const ScalarFunction& f);

  const FiniteElementSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  const Vector& coefficients() const { return coeffs_; }
  Vector& coefficients() { return coeffs_; }
  bool empty() const { return space_ == nullptr; }

  double value(const Location& loc) const;
  // Elementwise gradient (discontinuous across edges).
  Vec2 gradient(const Location& loc) const;
  // Locates p first; throws a numerical Error outside the mesh.
  double value(const Vec2& p) const;

  friend ScalarField operator+(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator-(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator*(double s, const ScalarField& a);

 private:
  SpacePtr space_;
  Vector coeffs_;
};

struct VectorField {
  ScalarField x;
  ScalarField y;

  Vec2 value(const Location& loc) const { return {x.value(loc), y.value(loc)}; }
  // Row i holds the elementwise gradient of component i.
  Mat2 jacobian(const Location& loc) const;
};

Location locate_or_throw(const Mesh& mesh, const Vec2& p);

double evaluate(const ScalarField& field, const Vec2& p);

// Continuous gradient: at every dof, the area-weighted mean of the elementwise
// gradients of the triangles sharing it. Exact for globally linear fields.
VectorField recover_gradient(const ScalarField& field);

// vertices.csv (id,x,y) and triangles.csv (id,v0,v1,v2) in `dir`.
void write_mesh_csv(const Mesh& mesh, const std::filesystem::path& dir);
// Columns dof_id,x,y,value.
void write_field_csv(const ScalarField& field, const std::filesystem::path& path);
ScalarField read_field_csv(SpacePtr space, const std::filesystem::path& path);

}  // namespace hamshape
