#include <gtest/gtest.h>

#include <random>

#include "hamshape/error.hpp"
#include "hamshape/geometry.hpp"

using namespace hamshape;

namespace {

const Box kD{-3.0, 3.0, -3.0, 3.0};

SpacePtr make_space(int n, int degree, MeshPattern pattern = MeshPattern::kDiagonal) {
  return std::make_shared<const FiniteElementSpace>(build_rectangle_mesh(kD, n, pattern), degree);
}

double total_area(const Mesh& m) {
  double a = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) a += m.area(t);
  return a;
}

}  // namespace

TEST(Mesh, CountsOnTwoByTwo) {
  const MeshPtr m = build_rectangle_mesh(kD, 2);
  EXPECT_EQ(m->num_vertices(), 9);
  EXPECT_EQ(m->num_triangles(), 8);
  EXPECT_NEAR(total_area(*m), 36.0, 1e-12);
}

TEST(Mesh, CrossedPatternHasFourTrianglesPerCell) {
  const MeshPtr m = build_rectangle_mesh(kD, 3, MeshPattern::kCrossed);
  EXPECT_EQ(m->num_triangles(), 4 * 9);
  EXPECT_EQ(m->num_vertices(), 16 + 9);
  EXPECT_NEAR(total_area(*m), 36.0, 1e-12);
}

TEST(Mesh, BoundaryEdgesCoverTheBox) {
  const MeshPtr m = build_rectangle_mesh(kD, 96);
  ASSERT_EQ(m->boundary_edges().size(), 4u * 96u);
  double length = 0.0;
  for (const auto& e : m->boundary_edges()) {
    const Vec2 a = m->vertex(e[0]);
    const Vec2 b = m->vertex(e[1]);
    length += (b - a).norm();
    // Interior on the left: the outward normal (dy, -dx) points away from the centre.
    const Vec2 mid = 0.5 * (a + b);
    const Vec2 normal(b.y() - a.y(), a.x() - b.x());
    EXPECT_GT(normal.dot(mid), 0.0);
  }
  EXPECT_NEAR(length, 24.0, 1e-10);
}

TEST(Mesh, InvariantsHold) {
  const MeshPtr m = build_rectangle_mesh({-1.0, 2.0, 0.0, 1.5}, 7, MeshPattern::kCrossed);
  for (int t = 0; t < m->num_triangles(); ++t) EXPECT_GT(m->area(t), 0.0);
  for (const Vec2& v : m->vertices()) EXPECT_TRUE(m->bounds().contains(v, 1e-14));
  EXPECT_NEAR(total_area(*m), 4.5, 1e-12);
}

TEST(Mesh, RejectsBadInput) {
  EXPECT_THROW(build_rectangle_mesh(kD, 1), Error);
  EXPECT_THROW(build_rectangle_mesh({0.0, 0.0, 0.0, 1.0}, 4), Error);
}

TEST(Mesh, LocateFindsContainingTriangle) {
  const MeshPtr m = build_rectangle_mesh(kD, 10);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const Vec2 p(u(rng), u(rng));
    const auto loc = m->locate(p);
    ASSERT_TRUE(loc.has_value());
    EXPECT_NEAR((m->point(loc->triangle, loc->bary) - p).norm(), 0.0, 1e-12);
    for (double l : loc->bary) EXPECT_GE(l, -1e-12);
  }
  EXPECT_FALSE(m->locate({3.5, 0.0}).has_value());
  EXPECT_THROW(locate_or_throw(*m, {0.0, -4.0}), Error);
}

TEST(Mesh, SharedEdgeGoesToLowestIndex) {
  const MeshPtr m = build_rectangle_mesh(kD, 4);
  // A vertex is shared by several triangles.
  const Vec2 p = m->vertex(7);
  const auto loc = m->locate(p);
  ASSERT_TRUE(loc.has_value());
  for (int t = 0; t < loc->triangle; ++t) {
    const Barycentric b = m->barycentric(t, p);
    EXPECT_LT(*std::min_element(b.begin(), b.end()), -1e-12);
  }
}

TEST(Space, DofCounts) {
  for (int n : {2, 5, 12}) {
    const auto p1 = make_space(n, 1);
    const auto p2 = make_space(n, 2);
    EXPECT_EQ(p1->size(), (n + 1) * (n + 1));
    EXPECT_EQ(p2->size(), (2 * n + 1) * (2 * n + 1));
    EXPECT_EQ(p1->boundary_dofs().size(), 4u * static_cast<unsigned>(n));
    EXPECT_EQ(p2->boundary_dofs().size(), 8u * static_cast<unsigned>(n));
    for (int d : p2->boundary_dofs()) {
      const Vec2 x = p2->dof_coordinates()[static_cast<std::size_t>(d)];
      EXPECT_NEAR(std::min({x.x() + 3.0, 3.0 - x.x(), x.y() + 3.0, 3.0 - x.y()}), 0.0, 1e-12);
    }
  }
}

TEST(Space, LinearReproduction) {
  const auto V = make_space(8, 1);
  const ScalarField f = ScalarField::interpolate(V, ScalarFunction::parse("2*x1 + x2 - 1"));
  EXPECT_NEAR(evaluate(f, {0.3, 0.7}), 0.3, 1e-12);
}

TEST(Space, QuadraticReproduction) {
  const auto V = make_space(8, 2);
  const ScalarField f = ScalarField::interpolate(V, ScalarFunction::parse("x1^2"));
  EXPECT_NEAR(evaluate(f, {0.5, 0.0}), 0.25, 1e-12);
}

TEST(Space, LagrangePropertyAtVertices) {
  const auto V = make_space(6, 2);
  const ScalarField f = ScalarField::interpolate(V, ScalarFunction::parse("sin(x1)*cos(x2)"));
  const Mesh& m = V->mesh();
  for (int i = 0; i < m.num_vertices(); ++i) {
    const Vec2 p = m.vertex(i);
    int dof = -1;
    for (int d = 0; d < V->size(); ++d) {
      if ((V->dof_coordinates()[static_cast<std::size_t>(d)] - p).norm() < 1e-12) dof = d;
    }
    ASSERT_GE(dof, 0);
    EXPECT_NEAR(evaluate(f, p), f.coefficients()[dof], 1e-12);
  }
}

class PolynomialReproduction : public ::testing::TestWithParam<int> {};

TEST_P(PolynomialReproduction, ExactAtRandomPoints) {
  const int degree = GetParam();
  const auto V = make_space(9, degree, MeshPattern::kCrossed);
  const std::vector<std::string> polys =
      degree == 1 ? std::vector<std::string>{"1", "x1", "x2", "0.5 - 3*x1 + 2*x2"}
                  : std::vector<std::string>{"1", "x1*x2", "x1^2 - 2*x2^2 + x1 - 4", "0.3*x2^2 + x1*x2 - x1"};
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (const auto& text : polys) {
    const ScalarFunction p = ScalarFunction::parse(text);
    const ScalarField f = ScalarField::interpolate(V, p);
    for (int i = 0; i < 100; ++i) {
      const Vec2 x(u(rng), u(rng));
      EXPECT_NEAR(evaluate(f, x), p.value(x), 1e-12 * std::max(1.0, std::abs(p.value(x)))) << text;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Degrees, PolynomialReproduction, ::testing::Values(1, 2));

TEST(Space, PartitionOfUnity) {
  for (int degree : {1, 2}) {
    const auto V = make_space(4, degree);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ShapeValues phi;
    for (int i = 0; i < 50; ++i) {
      double a = u(rng), b = u(rng);
      if (a + b > 1.0) {
        a = 1.0 - a;
        b = 1.0 - b;
      }
      V->shape_values({1.0 - a - b, a, b}, phi);
      double sum = 0.0;
      for (int k = 0; k < V->local_size(); ++k) sum += phi[static_cast<std::size_t>(k)];
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(Recovery, LinearFieldIsExact) {
  for (int degree : {1, 2}) {
    const auto V = make_space(7, degree);
    const VectorField g = recover_gradient(ScalarField::interpolate(V, ScalarFunction::parse("2*x1 + x2")));
    EXPECT_NEAR((g.x.coefficients().array() - 2.0).abs().maxCoeff(), 0.0, 1e-11);
    EXPECT_NEAR((g.y.coefficients().array() - 1.0).abs().maxCoeff(), 0.0, 1e-11);
  }
}

TEST(Recovery, ConstantGivesZero) {
  const auto V = make_space(5, 2);
  const VectorField g = recover_gradient(ScalarField::interpolate(V, ScalarFunction::constant(4.0)));
  EXPECT_LT(g.x.coefficients().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(g.y.coefficients().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Recovery, QuadraticErrorShrinksWithH) {
  // Oracle: analytic gradient 2 x1 at interior vertices.
  double previous = std::numeric_limits<double>::infinity();
  for (int n : {24, 48, 96}) {
    const auto V = make_space(n, 2);
    const VectorField g = recover_gradient(ScalarField::interpolate(V, ScalarFunction::parse("x1^2")));
    double worst = 0.0;
    const Mesh& m = V->mesh();
    for (int i = 0; i < m.num_vertices(); ++i) {
      const Vec2 v = m.vertex(i);
      if (std::abs(v.x()) > 2.9 || std::abs(v.y()) > 2.9) continue;
      worst = std::max(worst, std::abs(evaluate(g.x, v) - 2.0 * v.x()));
    }
    if (n == 96) EXPECT_LT(worst, 0.2);
    EXPECT_LE(worst, previous + 1e-12);
    previous = worst;
  }
}

TEST(Recovery, LinearInCoefficients) {
  const auto V = make_space(6, 2);
  const ScalarField a = ScalarField::interpolate(V, ScalarFunction::parse("sin(x1)*x2"));
  const ScalarField b = ScalarField::interpolate(V, ScalarFunction::parse("x1^2 - cos(x2)"));
  const VectorField ga = recover_gradient(a);
  const VectorField gb = recover_gradient(b);
  const VectorField gs = recover_gradient(a + 3.0 * b);
  EXPECT_LT((gs.x.coefficients() - ga.x.coefficients() - 3.0 * gb.x.coefficients()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((gs.y.coefficients() - ga.y.coefficients() - 3.0 * gb.y.coefficients()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FieldIo, RoundTrip) {
  const auto V = make_space(4, 2);
  const ScalarField f = ScalarField::interpolate(V, ScalarFunction::parse("exp(x1/3) - x2"));
  const auto path = std::filesystem::temp_directory_path() / "hamshape_field_roundtrip.csv";
  write_field_csv(f, path);
  const ScalarField g = read_field_csv(V, path);
  EXPECT_EQ((f.coefficients() - g.coefficients()).cwiseAbs().maxCoeff(), 0.0);
  std::filesystem::remove(path);
}
