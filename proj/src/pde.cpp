#include "hamshape/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hamshape/error.hpp"

namespace hamshape {

EllipticOperator::EllipticOperator(SpacePtr space, BoundaryCondition bc)
    : space_(std::move(space)), bc_(bc) {
  const FiniteElementSpace& V = *space_;
  const Mesh& mesh = V.mesh();
  const int nl = V.local_size();
  const auto& quad = V.quadrature();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.num_triangles() * nl * nl));
  ShapeValues phi;
  ShapeGradients grad;
  Eigen::Matrix<double, kMaxLocalDofs, kMaxLocalDofs> local;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    local.setZero();
    for (std::size_t q = 0; q < quad.points.size(); ++q) {
      V.shape_values(quad.points[q], phi);
      V.shape_gradients(t, quad.points[q], grad);
      const double w = quad.weights[q] * mesh.area(t);
      for (int a = 0; a < nl; ++a) {
        for (int b = 0; b < nl; ++b) {
          local(a, b) += w * (grad[static_cast<std::size_t>(a)].dot(grad[static_cast<std::size_t>(b)]) +
                              phi[static_cast<std::size_t>(a)] * phi[static_cast<std::size_t>(b)]);
        }
      }
    }
    const auto dofs = V.element_dofs(t);
    for (int a = 0; a < nl; ++a) {
      for (int b = 0; b < nl; ++b) {
        triplets.emplace_back(dofs[static_cast<std::size_t>(a)], dofs[static_cast<std::size_t>(b)], local(a, b));
      }
    }
  }
  const int n = V.size();
  matrix_.resize(n, n);
  matrix_.setFromTriplets(triplets.begin(), triplets.end());

  std::vector<int> index(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    if (bc_ == BoundaryCondition::kNatural || !V.on_boundary(i)) {
      index[static_cast<std::size_t>(i)] = static_cast<int>(free_dofs_.size());
      free_dofs_.push_back(i);
    }
  }
  std::vector<Eigen::Triplet<double>> reduced;
  reduced.reserve(static_cast<std::size_t>(matrix_.nonZeros()));
  for (int col = 0; col < matrix_.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(matrix_, col); it; ++it) {
      const int r = index[static_cast<std::size_t>(it.row())];
      const int c = index[static_cast<std::size_t>(it.col())];
      if (r >= 0 && c >= 0) reduced.emplace_back(r, c, it.value());
    }
  }
  const int nf = static_cast<int>(free_dofs_.size());
  reduced_.resize(nf, nf);
  reduced_.setFromTriplets(reduced.begin(), reduced.end());
  factor_.compute(reduced_);
  if (factor_.info() != Eigen::Success) {
    throw numerical_error("solver_failure", "factorization of the elliptic operator failed");
  }
}

ScalarField EllipticOperator::solve(const Vector& load) const {
  if (load.size() != space_->size()) throw numerical_error("solver_failure", "load size mismatch");
  const int nf = static_cast<int>(free_dofs_.size());
  Vector b(nf);
  for (int i = 0; i < nf; ++i) b[i] = load[free_dofs_[static_cast<std::size_t>(i)]];
  Vector out = Vector::Zero(space_->size());
  const double bnorm = b.norm();
  if (bnorm == 0.0) return ScalarField(space_, std::move(out));
  Vector x = factor_.solve(b);
  if (factor_.info() != Eigen::Success || !x.allFinite()) {
    throw numerical_error("solver_failure", "sparse solve failed");
  }
  const double residual = (reduced_ * x - b).norm();
  if (residual > 1e-10 * bnorm) {
    // One step of iterative refinement before giving up.
    x += factor_.solve(b - reduced_ * x);
    if ((reduced_ * x - b).norm() > 1e-10 * bnorm) {
      throw numerical_error("solver_failure", "relative residual above 1e-10");
    }
  }
  for (int i = 0; i < nf; ++i) out[free_dofs_[static_cast<std::size_t>(i)]] = x[i];
  return ScalarField(space_, std::move(out));
}

Vector assemble_load(const FiniteElementSpace& space, const PointIntegrand& integrand) {
  const Mesh& mesh = space.mesh();
  const auto& quad = space.quadrature();
  Vector load = Vector::Zero(space.size());
  ShapeValues phi;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto dofs = space.element_dofs(t);
    for (std::size_t q = 0; q < quad.points.size(); ++q) {
      const Location loc{t, quad.points[q]};
      const double v = integrand(loc, mesh.point(t, quad.points[q]));
      if (v == 0.0) continue;
      space.shape_values(quad.points[q], phi);
      const double w = quad.weights[q] * mesh.area(t) * v;
      for (std::size_t a = 0; a < dofs.size(); ++a) load[dofs[a]] += w * phi[a];
    }
  }
  return load;
}

double integrate(const FiniteElementSpace& space, const PointIntegrand& integrand, const TriangleMask* mask) {
  const Mesh& mesh = space.mesh();
  const auto& quad = space.quadrature();
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (mask && !(*mask)[static_cast<std::size_t>(t)]) continue;
    double local = 0.0;
    for (std::size_t q = 0; q < quad.points.size(); ++q) {
      local += quad.weights[q] * integrand(Location{t, quad.points[q]}, mesh.point(t, quad.points[q]));
    }
    sum += local * mesh.area(t);
  }
  return sum;
}

double positive_part(double v) { return v > 0.0 ? v : 0.0; }

namespace {

void require_same_mesh(const EllipticOperator& op, const ScalarField& field, const char* name) {
  if (&field.space().mesh() != &op.space().mesh()) {
    throw config_error(std::string(name) + " must live on the operator's mesh");
  }
}

}  // namespace

ScalarField solve_state(const EllipticOperator& op, const LevelSet& g, const ScalarField& u,
                        const ScalarFunction& f) {
  require_same_mesh(op, u, "control");
  const Mesh& mesh = op.space().mesh();
  const Vector load = assemble_load(op.space(), [&](const Location& loc, const Vec2& x) {
    const double gp = positive_part(g.value(mesh, loc));
    return f.value(x) + gp * gp * u.value(loc);
  });
  return op.solve(load);
}

ScalarField solve_linearized(const EllipticOperator& op, const LevelSet& g, const ScalarField& u,
                             const LevelSet& r, const ScalarField& v) {
  require_same_mesh(op, u, "control");
  require_same_mesh(op, v, "control variation");
  const Mesh& mesh = op.space().mesh();
  const Vector load = assemble_load(op.space(), [&](const Location& loc, const Vec2&) {
    const double gp = positive_part(g.value(mesh, loc));
    if (gp == 0.0) return 0.0;
    return gp * gp * v.value(loc) + 2.0 * gp * u.value(loc) * r.value(mesh, loc);
  });
  return op.solve(load);
}

ScalarField solve_adjoint(const EllipticOperator& op, const Vector& load) { return op.solve(load); }

ScalarField solve_control_smoothing(const EllipticOperator& op, const LevelSet& g, const ScalarField& u,
                                    const ScalarField& p) {
  if (op.boundary_condition() != BoundaryCondition::kNatural) {
    throw config_error("control smoothing needs the unconstrained space");
  }
  require_same_mesh(op, u, "control");
  require_same_mesh(op, p, "adjoint");
  const Mesh& mesh = op.space().mesh();
  const Vector load = assemble_load(op.space(), [&](const Location& loc, const Vec2&) {
    const double gp = positive_part(g.value(mesh, loc));
    if (gp == 0.0) return 0.0;
    return 2.0 * gp * u.value(loc) * p.value(loc);
  });
  return op.solve(load);
}

std::optional<Location> NeumannSolution::locate_near(const Mesh& parent_mesh, const Vec2& p) const {
  if (auto loc = parent_mesh.locate(p)) {
    const int c = child[static_cast<std::size_t>(loc->triangle)];
    if (c >= 0) return Location{c, loc->bary};
  }
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int t : parent_mesh.triangles_near(p, 3.0 * parent_mesh.h())) {
    if (child[static_cast<std::size_t>(t)] < 0) continue;
    const double d = (parent_mesh.centroid(t) - p).norm();
    if (d < best_d) {
      best_d = d;
      best = t;
    }
  }
  if (best < 0) return std::nullopt;
  Barycentric b = parent_mesh.barycentric(best, p);
  if (*std::min_element(b.begin(), b.end()) < -1.0) {
    // More than one triangle away: clamp rather than extrapolate the
    // polynomial that far.
    double sum = 0.0;
    for (double& l : b) sum += (l = std::max(l, 0.0));
    for (double& l : b) l /= sum;
  }
  return Location{child[static_cast<std::size_t>(best)], b};
}

Location NeumannSolution::locate(const Mesh& parent_mesh, const Vec2& p) const {
  if (auto loc = locate_near(parent_mesh, p)) return *loc;
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  // Thin necks of {g < 0} may hold no masked triangle: use the nearest one
  // anywhere, with the point clamped into it instead of extrapolating.
  for (std::size_t c = 0; c < parent.size(); ++c) {
    const double d = (parent_mesh.centroid(parent[c]) - p).norm();
    if (d < best_d) {
      best_d = d;
      best = parent[c];
    }
  }
  if (best < 0) throw numerical_error("outside_domain", "validation domain is empty");
  Barycentric b = parent_mesh.barycentric(best, p);
  double sum = 0.0;
  for (double& l : b) sum += (l = std::max(l, 0.0));
  for (double& l : b) l /= sum;
  return Location{child[static_cast<std::size_t>(best)], b};
}

double NeumannSolution::value(const Mesh& parent_mesh, const Vec2& p) const {
  return y.value(locate(parent_mesh, p));
}

NeumannSolution solve_neumann_validation(const MeshPtr& mesh, int degree, const TriangleMask& mask,
                                         const ScalarFunction& f, const ScalarFunction& delta,
                                         const std::vector<TracedComponent>& boundary) {
  NeumannSolution sol;
  sol.child.assign(static_cast<std::size_t>(mesh->num_triangles()), -1);
  std::vector<int> vertex_map(static_cast<std::size_t>(mesh->num_vertices()), -1);
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  for (int t = 0; t < mesh->num_triangles(); ++t) {
    if (!mask[static_cast<std::size_t>(t)]) continue;
    std::array<int, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      const int v = mesh->triangle(t)[static_cast<std::size_t>(k)];
      int& mapped = vertex_map[static_cast<std::size_t>(v)];
      if (mapped < 0) {
        mapped = static_cast<int>(vertices.size());
        vertices.push_back(mesh->vertex(v));
      }
      tri[static_cast<std::size_t>(k)] = mapped;
    }
    sol.child[static_cast<std::size_t>(t)] = static_cast<int>(triangles.size());
    sol.parent.push_back(t);
    triangles.push_back(tri);
  }
  if (triangles.empty()) throw admissibility_error("empty_domain", "validation mask is empty");
  sol.mesh = std::make_shared<const Mesh>(std::move(vertices), std::move(triangles));
  sol.space = std::make_shared<const FiniteElementSpace>(sol.mesh, degree);
  const EllipticOperator op(sol.space, BoundaryCondition::kNatural);

  Vector load = assemble_load(*sol.space, [&](const Location&, const Vec2& x) { return f.value(x); });
  ShapeValues phi;
  auto add_flux = [&](const Location& loc, double weight) {
    sol.space->shape_values(loc.bary, phi);
    const auto dofs = sol.space->element_dofs(loc.triangle);
    for (std::size_t a = 0; a < dofs.size(); ++a) load[dofs[a]] += weight * phi[a];
  };
  if (!boundary.empty()) {
    for (const auto& comp : boundary) {
      const auto& s = comp.samples;
      for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const double h = s[i + 1].t - s[i].t;
        for (std::size_t e : {i, i + 1}) {
          const double w = 0.5 * h * s[e].dz.norm() * delta.value(s[e].z);
          if (w == 0.0) continue;
          // Parts of the curve the mask does not resolve carry no flux.
          if (auto loc = sol.locate_near(*mesh, s[e].z)) add_flux(*loc, w);
        }
      }
    }
  } else {
    // Two-point Gauss rule on each edge of the staircase boundary.
    const double c = 0.5 / std::sqrt(3.0);
    for (const auto& e : sol.mesh->boundary_edges()) {
      const Vec2 a = sol.mesh->vertex(e[0]);
      const Vec2 b = sol.mesh->vertex(e[1]);
      const double len = (b - a).norm();
      for (double s : {0.5 - c, 0.5 + c}) {
        const Vec2 x = a + s * (b - a);
        const double w = 0.5 * len * delta.value(x);
        if (w == 0.0) continue;
        add_flux(locate_or_throw(*sol.mesh, x), w);
      }
    }
  }
  sol.y = op.solve(load);
  return sol;
}

double h1_gap(const ScalarField& y_ext, const NeumannSolution& sol) {
  const Mesh& sub = *sol.mesh;
  const auto& quad = sol.space->quadrature();
  double sum = 0.0;
  for (int t = 0; t < sub.num_triangles(); ++t) {
    const int parent = sol.parent[static_cast<std::size_t>(t)];
    for (std::size_t q = 0; q < quad.points.size(); ++q) {
      const Location child{t, quad.points[q]};
      const Location outer{parent, quad.points[q]};
      const double dv = y_ext.value(outer) - sol.y.value(child);
      const Vec2 dg = y_ext.gradient(outer) - sol.y.gradient(child);
      sum += quad.weights[q] * sub.area(t) * (dv * dv + dg.squaredNorm());
    }
  }
  return std::sqrt(sum);
}

}  // namespace hamshape
