#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hamshape/error.hpp"
#include "hamshape/pde.hpp"

using namespace hamshape;

namespace {

const Box kD{-3.0, 3.0, -3.0, 3.0};

SpacePtr make_space(int n, int degree) {
  return std::make_shared<const FiniteElementSpace>(build_rectangle_mesh(kD, n), degree);
}

LevelSet analytic(const std::string& text) { return LevelSet::analytic(ScalarFunction::parse(text)); }

ScalarField field(const SpacePtr& V, const std::string& text) {
  return ScalarField::interpolate(V, ScalarFunction::parse(text));
}

double l2_error(const ScalarField& y, const ScalarFunction& exact) {
  const double sq = integrate(y.space(), [&](const Location& loc, const Vec2& x) {
    const double e = y.value(loc) - exact.value(x);
    return e * e;
  });
  return std::sqrt(sq);
}

double energy(const EllipticOperator& op, const ScalarField& y) {
  return y.coefficients().dot(op.matrix() * y.coefficients());
}

}  // namespace

class ManufacturedState : public ::testing::TestWithParam<int> {};

TEST_P(ManufacturedState, ConvergesAtOptimalRate) {
  // y = sin(pi x1 / 3) sin(pi x2 / 3) vanishes on the boundary of D and
  // solves -lap y + y = (2 (pi/3)^2 + 1) y.
  const int degree = GetParam();
  const double k = std::numbers::pi / 3.0;
  const ScalarFunction exact = ScalarFunction::parse("sin(pi*x1/3)*sin(pi*x2/3)");
  const ScalarFunction f = (2.0 * k * k + 1.0) * exact;
  const LevelSet g = analytic("-1");
  std::vector<double> errors;
  for (int n : {8, 16, 32}) {
    const SpacePtr V = make_space(n, degree);
    const EllipticOperator op(V, BoundaryCondition::kDirichlet);
    errors.push_back(l2_error(solve_state(op, g, ScalarField::zero(V), f), exact));
  }
  const double min_rate = degree == 1 ? 1.9 : 2.9;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    EXPECT_GE(std::log2(errors[i - 1] / errors[i]), min_rate) << "level " << i;
  }
}

INSTANTIATE_TEST_SUITE_P(Degrees, ManufacturedState, ::testing::Values(1, 2));

TEST(State, ZeroDataGivesZero) {
  const SpacePtr V = make_space(10, 2);
  const EllipticOperator op(V, BoundaryCondition::kDirichlet);
  const ScalarField y = solve_state(op, analytic("1 - x1^2"), ScalarField::zero(V), ScalarFunction::constant(0.0));
  EXPECT_EQ(y.coefficients().cwiseAbs().maxCoeff(), 0.0);
}

TEST(State, ControlOnlyActsWhereGIsPositive) {
  const SpacePtr V = make_space(12, 2);
  const EllipticOperator op(V, BoundaryCondition::kDirichlet);
  const ScalarField y = solve_state(op, analytic("-1 - x1^2"), field(V, "5 + x2"), ScalarFunction::constant(0.0));
  EXPECT_EQ(y.coefficients().cwiseAbs().maxCoeff(), 0.0);
}

TEST(State, DirichletDofsVanish) {
  const SpacePtr V = make_space(10, 2);
  const EllipticOperator op(V, BoundaryCondition::kDirichlet);
  const ScalarField y = solve_state(op, analytic("1"), field(V, "x1"), ScalarFunction::parse("3 + x2^2"));
  for (int d : V->boundary_dofs()) EXPECT_EQ(y.coefficients()[d], 0.0);
}

TEST(State, LinearInRightSide) {
  const SpacePtr V = make_space(12, 2);
  const EllipticOperator op(V, BoundaryCondition::kDirichlet);
  const LevelSet g = analytic("1 - x1^2 - x2^2");
  const ScalarFunction f = ScalarFunction::parse("cos(x1)");
  const ScalarField u = field(V, "x2 + 1");
  const ScalarField a = solve_state(op, g, u, f);
  const ScalarField b = solve_state(op, g, ScalarField::zero(V), f);
  const ScalarField c = solve_state(op, g, u, ScalarFunction::constant(0.0));
  EXPECT_LT((a.coefficients() - b.coefficients() - c.coefficients()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Operator, MatrixIsSymmetric) {
  for (int degree : {1, 2}) {
    const EllipticOperator op(make_space(6, degree), BoundaryCondition::kNatural);
    const SparseMatrix diff = op.matrix() - SparseMatrix(op.matrix().transpose());
    EXPECT_LT(diff.norm(), 1e-13);
  }
}

TEST(Operator, ConstantIsInTheNaturalProblem) {
  // With natural conditions -lap y + y = 1 has the solution y = 1.
  const SpacePtr V = make_space(8, 2);
  const EllipticOperator op(V, BoundaryCondition::kNatural);
  const Vector load = assemble_load(*V, [](const Location&, const Vec2&) { return 1.0; });
  const ScalarField y = op.solve(load);
  EXPECT_LT((y.coefficients().array() - 1.0).abs().maxCoeff(), 1e-10);
}

TEST(Linearized, MatchesCentralDifferences) {
  // Oracle: (y(g + s r, u + s v) - y(g - s r, u - s v)) / (2 s).
  const SpacePtr V = make_space(16, 2);
  const EllipticOperator op(V, BoundaryCondition::kDirichlet);
  const ScalarFunction gf = ScalarFunction::parse("1.5 - x1^2 - x2^2");
  const ScalarFunction rf = ScalarFunction::parse("0.3*x1 - 0.2*x2^2");
  const ScalarFunction f = ScalarFunction::parse("x1");
  const ScalarField u = field(V, "1 + 0.5*x1");
  const ScalarField v = field(V, "cos(x2)");
  const ScalarField q = solve_linearized(op, LevelSet::analytic(gf), u, LevelSet::analytic(rf), v);
  const double s = 1e-6;
  const ScalarField yp = solve_state(op, LevelSet::analytic(gf + s * rf), u + s * v, f);
  const ScalarField ym = solve_state(op, LevelSet::analytic(gf + (-s) * rf), u - s * v, f);
  const Vector fd = (yp.coefficients() - ym.coefficients()) / (2.0 * s);
  EXPECT_LT((q.coefficients() - fd).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
  EXPECT_GT(q.coefficients().cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Linearized, VanishesWhereGIsNegative) {
  const SpacePtr V = make_space(10, 2);
  const EllipticOperator op(V, BoundaryCondition::kDirichlet);
  const ScalarField q =
      solve_linearized(op, analytic("-0.5 - x2^2"), field(V, "1"), analytic("x1"), field(V, "2 + x1"));
  EXPECT_EQ(q.coefficients().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Adjoint, ZeroLoadGivesZero) {
  const SpacePtr V = make_space(10, 2);
  const EllipticOperator op(V, BoundaryCondition::kDirichlet);
  EXPECT_EQ(solve_adjoint(op, Vector::Zero(V->size())).coefficients().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Adjoint, SymmetryWithTheState) {
  // a(p, y) = <load, y> for every discrete y vanishing on the boundary.
  const SpacePtr V = make_space(12, 2);
  const EllipticOperator op(V, BoundaryCondition::kDirichlet);
  const Vector load = assemble_load(*V, [](const Location&, const Vec2& x) { return std::exp(-x.squaredNorm()); });
  const ScalarField p = solve_adjoint(op, load);
  const ScalarField y = solve_state(op, analytic("-1"), ScalarField::zero(V), ScalarFunction::parse("x1^2 + x2"));
  const double lhs = p.coefficients().dot(op.matrix() * y.coefficients());
  EXPECT_NEAR(lhs, load.dot(y.coefficients()), 1e-10 * std::abs(lhs));
}

TEST(Smoothing, EnergyIdentity) {
  // ||d||_H1^2 = int 2 g_+ u p d for the natural-condition solution d.
  const SpacePtr V = make_space(14, 2);
  const EllipticOperator op(V, BoundaryCondition::kNatural);
  const LevelSet g = analytic("1 - 0.5*x1^2 - x2^2");
  const ScalarField u = field(V, "1 + x1*x2");
  const ScalarField p = field(V, "sin(x1) + 0.3");
  const ScalarField d = solve_control_smoothing(op, g, u, p);
  const double rhs = integrate(*V, [&](const Location& loc, const Vec2&) {
    return 2.0 * positive_part(g.value(V->mesh(), loc)) * u.value(loc) * p.value(loc) * d.value(loc);
  });
  EXPECT_NEAR(energy(op, d), rhs, 1e-10 * std::abs(rhs));
  EXPECT_GT(rhs, 0.0);
}

TEST(Smoothing, ZeroWhereControlHasNoEffect) {
  const SpacePtr V = make_space(8, 2);
  const EllipticOperator op(V, BoundaryCondition::kNatural);
  const ScalarField d = solve_control_smoothing(op, analytic("-2"), field(V, "1"), field(V, "x1"));
  EXPECT_EQ(d.coefficients().cwiseAbs().maxCoeff(), 0.0);
}

namespace {

struct DiskSetup {
  MeshPtr mesh;
  TriangleMask mask;
  std::vector<TracedComponent> comps;
};

DiskSetup unit_disk(int n) {
  DiskSetup s;
  s.mesh = build_rectangle_mesh(kD, n);
  const LevelSet g = analytic("x1^2 + x2^2 - 1");
  s.mask = classify_domain(g, *s.mesh, Vec2(0.0, 0.0));
  TracerOptions o;
  o.h = s.mesh->h();
  s.comps = detect_components(g, *s.mesh, o);
  return s;
}

}  // namespace

TEST(Neumann, ConstantSolutionIsExact) {
  const DiskSetup s = unit_disk(32);
  const NeumannSolution sol = solve_neumann_validation(s.mesh, 2, s.mask, ScalarFunction::constant(2.5),
                                                       ScalarFunction::constant(0.0), s.comps);
  EXPECT_LT((sol.y.coefficients().array() - 2.5).abs().maxCoeff(), 1e-10);
  EXPECT_NEAR(sol.value(*s.mesh, {0.2, -0.1}), 2.5, 1e-10);
}

TEST(Neumann, ManufacturedDiskConverges) {
  // y = x1^2 + x2^2: -lap y + y = x1^2 + x2^2 - 4, dy/dn = 2 on the unit circle.
  // The staircase domain limits the L2 rate to about one.
  const ScalarFunction exact = ScalarFunction::parse("x1^2 + x2^2");
  std::vector<double> errors;
  for (int n : {24, 48, 96}) {
    const DiskSetup s = unit_disk(n);
    const NeumannSolution sol = solve_neumann_validation(
        s.mesh, 2, s.mask, ScalarFunction::parse("x1^2 + x2^2 - 4"), ScalarFunction::constant(2.0), s.comps);
    errors.push_back(l2_error(sol.y, exact));
  }
  for (std::size_t i = 1; i < errors.size(); ++i) {
    EXPECT_GE(std::log2(errors[i - 1] / errors[i]), 0.9) << errors[i - 1] << " -> " << errors[i];
  }
}

TEST(Neumann, GapAgainstInterpolatedSolutionShrinks) {
  std::vector<double> gaps;
  for (int n : {24, 48, 96}) {
    const DiskSetup s = unit_disk(n);
    const NeumannSolution sol = solve_neumann_validation(
        s.mesh, 2, s.mask, ScalarFunction::parse("x1^2 + x2^2 - 4"), ScalarFunction::constant(2.0), s.comps);
    const SpacePtr V = std::make_shared<const FiniteElementSpace>(s.mesh, 2);
    gaps.push_back(h1_gap(field(V, "x1^2 + x2^2"), sol));
  }
  EXPECT_LT(gaps[1], gaps[0]);
  EXPECT_LT(gaps[2], gaps[1]);
}

TEST(Neumann, EmptyMaskIsRejected) {
  const MeshPtr m = build_rectangle_mesh(kD, 8);
  const TriangleMask mask(static_cast<std::size_t>(m->num_triangles()), 0);
  try {
    solve_neumann_validation(m, 2, mask, ScalarFunction::constant(1.0), ScalarFunction::constant(0.0), {});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "empty_domain");
  }
}
