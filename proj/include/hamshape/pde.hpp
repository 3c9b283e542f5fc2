#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/SparseCholesky>

#include "hamshape/geometry.hpp"
#include "hamshape/hamiltonian.hpp"
#include "hamshape/levelset.hpp"

namespace hamshape {

enum class BoundaryCondition { kDirichlet, kNatural };

/// Bilinear form a(y, phi) = int grad y . grad phi + y phi on a space,
/// assembled and factorized once. Dirichlet rows are eliminated (y = 0 on
/// the boundary dofs); natural conditions keep every dof.
class EllipticOperator {
 public:
  EllipticOperator(SpacePtr space, BoundaryCondition bc);

  const FiniteElementSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  BoundaryCondition boundary_condition() const { return bc_; }
  // Unconstrained stiffness + mass matrix.
  const SparseMatrix& matrix() const { return matrix_; }

  // `load` holds int(rhs * phi_i) for every dof; entries on constrained
  // dofs are ignored. Throws a numerical Error if the relative residual
  // exceeds 1e-10.
  ScalarField solve(const Vector& load) const;

 private:
  SpacePtr space_;
  BoundaryCondition bc_;
  SparseMatrix matrix_;
  std::vector<int> free_dofs_;
  Eigen::SimplicialLDLT<SparseMatrix> factor_;
  SparseMatrix reduced_;
};

// Integrand evaluated at a quadrature point, given both as a mesh location
// and as physical coordinates.
using PointIntegrand = std::function<double(const Location&, const Vec2&)>;

// int integrand * phi_i over the mesh with the space's quadrature rule.
Vector assemble_load(const FiniteElementSpace& space, const PointIntegrand& integrand);
// int integrand over the mesh (or the masked triangles when mask is given).
double integrate(const FiniteElementSpace& space, const PointIntegrand& integrand,
                 const TriangleMask* mask = nullptr);

double positive_part(double v);

// -lap y + y = f + g_+^2 u in D, y = 0 on the boundary.
ScalarField solve_state(const EllipticOperator& op, const LevelSet& g, const ScalarField& u,
                        const ScalarFunction& f);
// Same operator with right side g_+^2 v + 2 g_+ u r.
ScalarField solve_linearized(const EllipticOperator& op, const LevelSet& g, const ScalarField& u,
                             const LevelSet& r, const ScalarField& v);
ScalarField solve_adjoint(const EllipticOperator& op, const Vector& load);
// Natural conditions, right side 2 g_+ u p.
ScalarField solve_control_smoothing(const EllipticOperator& op, const LevelSet& g,
                                    const ScalarField& u, const ScalarField& p);

/// Solution of the Neumann problem on the masked sub-triangulation.
struct NeumannSolution {
  MeshPtr mesh;
  SpacePtr space;
  ScalarField y;
  std::vector<int> parent;  // submesh triangle -> parent triangle
  std::vector<int> child;   // parent triangle -> submesh triangle or -1

  // Value at p, extrapolating from the nearest masked triangle when p lies
  // outside the staircase domain; beyond 3h the point is clamped into it.
  double value(const Mesh& parent_mesh, const Vec2& p) const;
  Location locate(const Mesh& parent_mesh, const Vec2& p) const;
  // Only masked triangles within 3h of p; nullopt otherwise.
  std::optional<Location> locate_near(const Mesh& parent_mesh, const Vec2& p) const;
};

// -lap y + y = f on the masked triangles with dy/dn = delta. The flux is
// integrated along `boundary` (the traced curves) when given, otherwise
// along the staircase boundary of the mask.
NeumannSolution solve_neumann_validation(const MeshPtr& mesh, int degree, const TriangleMask& mask,
                                         const ScalarFunction& f, const ScalarFunction& delta,
                                         const std::vector<TracedComponent>& boundary);

// H1 norm of (y_ext - y_N) over the submesh.
double h1_gap(const ScalarField& y_ext, const NeumannSolution& sol);

}  // namespace hamshape
