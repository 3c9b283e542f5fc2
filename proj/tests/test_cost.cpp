#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hamshape/app.hpp"
#include "hamshape/cost.hpp"
#include "hamshape/pde.hpp"

using namespace hamshape;

namespace {

constexpr double kPi = std::numbers::pi;
const Box kD{-3.0, 3.0, -3.0, 3.0};

LevelSet analytic(const std::string& text) { return LevelSet::analytic(ScalarFunction::parse(text)); }

std::vector<TracedComponent> unit_circle(double h = 6.0 / 96.0) {
  TracerOptions o;
  o.h = h;
  return {trace_component(analytic("x1^2 + x2^2 - 1"), {1.0, 0.0}, o)};
}

RunConfig preset(const std::string& name, int n) {
  RunConfig c = load_config(name, std::nullopt);
  c.n_per_side = n;
  return c;
}

}  // namespace

TEST(BoundaryIntegral, ArcLength) {
  EXPECT_NEAR(boundary_integral(unit_circle(), [](const TraceSample&) { return 1.0; }), 2.0 * kPi, 1e-6);
}

TEST(BoundaryIntegral, MatchingFluxVanishes) {
  // y = x1^2 + x2^2 has normal derivative 2 on the unit circle.
  auto residual = [](double delta) {
    return [delta](const TraceSample& s) {
      const Vec2 grad_y = 2.0 * s.z;
      const double flux = grad_y.dot(unit_normal(s));
      return (flux - delta) * (flux - delta);
    };
  };
  EXPECT_NEAR(boundary_integral(unit_circle(), residual(2.0)), 0.0, 1e-10);
  EXPECT_NEAR(boundary_integral(unit_circle(), residual(0.0)), 8.0 * kPi, 1e-5);
}

TEST(BoundaryIntegral, SumsOverComponents) {
  TracerOptions o;
  o.h = 0.05;
  const LevelSet g = analytic("min((x1-1.5)^2 + x2^2 - 0.25, (x1+1.5)^2 + x2^2 - 1)");
  const auto comps = trace_all(g, {{2.0, 0.0}, {-0.5, 0.0}}, o);
  EXPECT_NEAR(boundary_integral(comps, [](const TraceSample&) { return 1.0; }), 2.0 * kPi * 1.5, 1e-6);
}

TEST(BoundaryIntegral, AccurateOnSmoothIntegrands) {
  // Oracle: int over the unit circle of x1^2 = pi.
  auto err = [](double dt) {
    TracerOptions o;
    o.time_step = dt;
    const auto c = trace_component(analytic("x1^2 + x2^2 - 1"), {1.0, 0.0}, o);
    return std::abs(boundary_integral({c}, [](const TraceSample& s) { return s.z.x() * s.z.x() + s.z.x(); }) - kPi);
  };
  // Trajectory and quadrature errors together fall at least quadratically.
  EXPECT_GE(std::log2(err(0.04) / err(0.02)), 1.9);
  EXPECT_GE(std::log2(err(0.02) / err(0.01)), 1.9);
  EXPECT_LT(err(0.01), 1e-6);
}

TEST(CostFunctions, TrackingDerivativesMatchFiniteDifferences) {
  const CostFunctions cf = CostFunctions::tracking(ScalarFunction::parse("x1^2 + x2^2 - 1"), true, true);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double s = 1e-6;
  for (int i = 0; i < 50; ++i) {
    const Vec2 x(u(rng), u(rng));
    const double y = u(rng);
    const double dJ = (cf.J(x, y + s) - cf.J(x, y - s)) / (2 * s);
    const double dj = (cf.j(x, y + s) - cf.j(x, y - s)) / (2 * s);
    const Vec2 dx((cf.j(x + Vec2(s, 0), y) - cf.j(x - Vec2(s, 0), y)) / (2 * s),
                  (cf.j(x + Vec2(0, s), y) - cf.j(x - Vec2(0, s), y)) / (2 * s));
    EXPECT_NEAR(cf.dJ_dy(x, y), dJ, 1e-5 * std::max(1.0, std::abs(dJ)));
    EXPECT_NEAR(cf.dj_dy(x, y), dj, 1e-5 * std::max(1.0, std::abs(dj)));
    EXPECT_LT((cf.dj_dx(x, y) - dx).norm(), 1e-5 * std::max(1.0, dx.norm()));
    EXPECT_GE(cf.J(x, y), 0.0);
  }
}

TEST(Cost, IdentityAndSigns) {
  for (const char* name : {"example1", "example2"}) {
    const hamshape::Setup s = make_setup(preset(name, 32));
    const CostProblem& cp = s.problem->cost();
    const Evaluation e = evaluate(*s.problem, s.problem->project(s.g0), s.u0, s.settings.tracer);
    const CostBreakdown& c = e.cost;
    EXPECT_NEAR(c.total, c.t1 + c.t2 + c.t3 / cp.epsilon, 1e-12 * c.total) << name;
    EXPECT_EQ(c.epsilon, cp.epsilon);
    EXPECT_GE(c.t1, 0.0);
    EXPECT_GE(c.t2, 0.0);
    EXPECT_GE(c.t3, 0.0);
  }
}

TEST(Cost, ZeroDataGivesZero) {
  auto V = std::make_shared<const FiniteElementSpace>(build_rectangle_mesh(kD, 16), 2);
  CostProblem cp;
  cp.delta = ScalarFunction::constant(0.0);
  cp.epsilon = 0.3;
  const CostBreakdown c = evaluate_cost(ScalarField::interpolate(V, ScalarFunction::constant(5.0)), unit_circle(), cp);
  EXPECT_EQ(c.t1, 0.0);
  EXPECT_EQ(c.t2, 0.0);
  EXPECT_LT(c.t3, 1e-20);
  EXPECT_LT(c.total, 1e-19);
}

TEST(Cost, DistributedTermIntegratesOverE) {
  // Oracle: int over the disk of radius 0.5 of 1/2 (0 - (x1^2 + x2^2 - 1))^2
  //       = pi int_0^0.5 (r^2 - 1)^2 r dr.
  auto V = std::make_shared<const FiniteElementSpace>(build_rectangle_mesh(kD, 16), 2);
  CostProblem cp;
  cp.region = ObservationRegion::disk({0.0, 0.0}, 0.5);
  cp.functions = CostFunctions::tracking(ScalarFunction::parse("x1^2 + x2^2 - 1"), true, false);
  cp.delta = ScalarFunction::constant(0.0);
  const double R = 0.5;
  const double exact = kPi * (std::pow(R, 6) / 6.0 - std::pow(R, 4) / 2.0 + R * R / 2.0);
  const CostBreakdown c = evaluate_cost(ScalarField::zero(V), unit_circle(), cp);
  EXPECT_NEAR(c.t1, exact, 1e-10);
}

class AdjointLoad : public ::testing::TestWithParam<std::string> {};

TEST_P(AdjointLoad, IsTheDerivativeOfTheCostInY) {
  // The cost is quadratic in y, so a central difference is exact up to rounding.
  const hamshape::Setup s = make_setup(preset(GetParam(), 24));
  const Evaluation e = evaluate(*s.problem, s.problem->project(s.g0), s.u0, s.settings.tracer);
  const Vector load = adjoint_load(e.y, e.components, s.problem->cost());
  std::mt19937 rng(17);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 3; ++trial) {
    Vector phi(s.space->size());
    for (int i = 0; i < phi.size(); ++i) phi[i] = s.space->on_boundary(i) ? 0.0 : nd(rng);
    const double step = 1e-3;
    const ScalarField dphi(s.space, phi);
    const double jp = evaluate_cost(e.y + step * dphi, e.components, s.problem->cost()).total;
    const double jm = evaluate_cost(e.y - step * dphi, e.components, s.problem->cost()).total;
    const double fd = (jp - jm) / (2.0 * step);
    EXPECT_NEAR(load.dot(phi), fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

INSTANTIATE_TEST_SUITE_P(Presets, AdjointLoad, ::testing::Values("example1", "example2"));

TEST(DirectionalDerivative, ZeroDirection) {
  RunConfig cfg = preset("example1", 32);
  const GradCheckResult r = gradient_check(cfg, {"x1^2 + x2^2 - 1", "1", "0", "0"});
  EXPECT_EQ(r.derivative, 0.0);
  EXPECT_EQ(r.theta.at(0), 0.0);
}

TEST(DirectionalDerivative, IndependentFiniteDifference) {
  // Cost of (g + s r, u + s v) with the trace started at (1, 0), where r = 0.
  const RunConfig cfg = preset("example1", 48);
  const MeshPtr mesh = cfg.build_mesh();
  auto V = std::make_shared<const FiniteElementSpace>(mesh, cfg.degree);
  const EllipticOperator op(V, BoundaryCondition::kDirichlet);
  const CostProblem cp = cfg.cost_problem();
  const ScalarFunction f = ScalarFunction::parse(cfg.f);
  const ScalarFunction gf = ScalarFunction::parse("x1^2 + x2^2 - 1");
  const ScalarFunction rf = ScalarFunction::parse("0.3*x1*x2 + 0.2*x2");
  const ScalarField u = ScalarField::interpolate(V, ScalarFunction::parse("1 + 0.2*x1"));
  const ScalarField v = ScalarField::interpolate(V, ScalarFunction::parse("0.5*x1"));
  TracerOptions o = cfg.settings(*mesh).tracer;
  const LevelSet g = LevelSet::analytic(gf);
  const LevelSet r = LevelSet::analytic(rf);
  const TracedComponent c0 = trace_component(g, {1.0, 0.0}, o);
  o.time_step = c0.time_step;

  const std::vector<TracedComponent> comps{c0};
  const ScalarField y = solve_state(op, g, u, f);
  const ScalarField q = solve_linearized(op, g, u, r, v);
  const std::vector<VariationTrajectory> w{solve_variation(g, r, c0)};
  const std::vector<double> theta{period_derivative(c0, w[0])};
  DerivativeInputs in;
  in.y = &y;
  in.q = &q;
  in.g = &g;
  in.r = &r;
  in.components = &comps;
  in.variations = &w;
  in.thetas = &theta;
  const double dJ = directional_derivative(in, cp);

  auto cost_at = [&](double s) {
    const LevelSet gs = LevelSet::analytic(gf + s * rf);
    const ScalarField us = u + s * v;
    return evaluate_cost(solve_state(op, gs, us, f), {trace_component(gs, {1.0, 0.0}, o)}, cp).total;
  };
  const double s = 1e-4;
  const double fd = (cost_at(s) - cost_at(-s)) / (2.0 * s);
  EXPECT_LE(std::abs(dJ - fd), 1e-3 * std::abs(fd)) << dJ << " vs " << fd;

  // Linear in (r, v): doubling both doubles the value.
  const LevelSet r2 = LevelSet::analytic(2.0 * rf);
  const ScalarField q2 = solve_linearized(op, g, u, r2, 2.0 * v);
  const std::vector<VariationTrajectory> w2{solve_variation(g, r2, c0)};
  const std::vector<double> theta2{period_derivative(c0, w2[0])};
  in.q = &q2;
  in.r = &r2;
  in.variations = &w2;
  in.thetas = &theta2;
  EXPECT_NEAR(directional_derivative(in, cp), 2.0 * dJ, 1e-10 * std::abs(dJ));
}

class GradCheck : public ::testing::TestWithParam<int> {};

TEST_P(GradCheck, DefaultCasesAgreeWithFiniteDifferences) {
  const auto cases = default_grad_cases();
  ASSERT_GE(cases.size(), 5u);
  const GradCheckCase& gc = cases[static_cast<std::size_t>(GetParam())];
  const GradCheckResult r = gradient_check(preset("example1", 48), gc);
  EXPECT_LE(r.relative_error, 1e-3) << gc.g << ": " << r.derivative << " vs " << r.finite_difference;
  EXPECT_LE(r.theta_error, 1e-3);
}

INSTANTIATE_TEST_SUITE_P(Cases, GradCheck, ::testing::Range(0, 5));

TEST(InitialCost, ExampleOneCoarse) {
  const hamshape::Setup s = make_setup(preset("example1", 48));
  const Evaluation e = evaluate(*s.problem, s.g0, s.u0, s.settings.tracer);
  EXPECT_EQ(e.components.size(), 2u);
  EXPECT_NEAR(e.cost.total, 291.89, 0.1 * 291.89);
  EXPECT_EQ(e.cost.t1, 0.0);
}

TEST(InitialCost, ExampleTwoCoarse) {
  const hamshape::Setup s = make_setup(preset("example2", 48));
  const Evaluation e = evaluate(*s.problem, s.problem->project(s.g0), s.u0, s.settings.tracer);
  EXPECT_NEAR(e.cost.t1, 8.03, 0.15 * 8.03);
  EXPECT_NEAR(e.cost.total, 269.05, 0.1 * 269.05);
  EXPECT_EQ(e.cost.t2, 0.0);
}
