#include "hamshape/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "hamshape/error.hpp"
#include "hamshape/hamiltonian.hpp"

namespace hamshape {

LevelSet::LevelSet() : LevelSet(std::make_shared<const Backend>(ScalarFunction())) {}

LevelSet::LevelSet(std::shared_ptr<const Backend> backend) : backend_(std::move(backend)) {}

LevelSet LevelSet::analytic(ScalarFunction f) {
  return LevelSet(std::make_shared<const Backend>(std::move(f)));
}

LevelSet LevelSet::from_field(ScalarField field, bool with_hessian) {
  if (field.empty()) throw config_error("level set from an empty field");
  VectorField grad = recover_gradient(field);
  return LevelSet(std::make_shared<const Backend>(
      FieldBackend{std::move(field), std::move(grad), with_hessian}));
}

bool LevelSet::is_analytic() const { return std::holds_alternative<ScalarFunction>(*backend_); }

bool LevelSet::has_hessian() const {
  if (const auto* fe = std::get_if<FieldBackend>(backend_.get())) return fe->with_hessian;
  return true;
}

const ScalarField* LevelSet::field() const {
  if (const auto* fe = std::get_if<FieldBackend>(backend_.get())) return &fe->g;
  return nullptr;
}

const ScalarFunction* LevelSet::function() const {
  return std::get_if<ScalarFunction>(backend_.get());
}

LevelSample LevelSet::sample(const Vec2& p, bool need_hessian) const {
  if (const auto* f = std::get_if<ScalarFunction>(backend_.get())) {
    const Jet j = (*f)(p);
    return {j.value, j.gradient(), j.hessian()};
  }
  const auto& fe = std::get<FieldBackend>(*backend_);
  if (need_hessian && !fe.with_hessian) {
    throw numerical_error("missing_hessian", "level set backend has no second derivatives");
  }
  const Location loc = locate_or_throw(fe.g.space().mesh(), p);
  LevelSample s;
  s.value = fe.g.value(loc);
  s.gradient = fe.grad.value(loc);
  if (need_hessian) s.hessian = fe.grad.jacobian(loc);
  return s;
}

double LevelSet::value(const Vec2& p) const {
  if (const auto* f = std::get_if<ScalarFunction>(backend_.get())) return f->value(p);
  return std::get<FieldBackend>(*backend_).g.value(p);
}

Vec2 LevelSet::gradient(const Vec2& p) const { return sample(p).gradient; }

Mat2 LevelSet::hessian(const Vec2& p) const { return sample(p, true).hessian; }

double LevelSet::value(const Mesh& mesh, const Location& loc) const {
  if (const auto* fe = std::get_if<FieldBackend>(backend_.get())) {
    if (&fe->g.space().mesh() == &mesh) return fe->g.value(loc);
  }
  return value(mesh.point(loc.triangle, loc.bary));
}

ScalarField LevelSet::interpolate(const SpacePtr& space) const {
  if (const auto* fe = std::get_if<FieldBackend>(backend_.get())) {
    if (fe->g.space_ptr() == space) return fe->g;
  }
  Vector c(space->size());
  const auto& coords = space->dof_coordinates();
  for (int i = 0; i < space->size(); ++i) c[i] = value(coords[static_cast<std::size_t>(i)]);
  return ScalarField(space, std::move(c));
}

std::vector<double> LevelSet::vertex_values(const Mesh& mesh) const {
  std::vector<double> out(static_cast<std::size_t>(mesh.num_vertices()));
  const auto* fe = std::get_if<FieldBackend>(backend_.get());
  const bool same_mesh = fe && &fe->g.space().mesh() == &mesh;
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    // Vertex dofs come first in every space.
    out[static_cast<std::size_t>(i)] = same_mesh ? fe->g.coefficients()[i] : value(mesh.vertex(i));
  }
  return out;
}

LevelSet LevelSet::plus(double lambda, const LevelSet& r, const SpacePtr& space) const {
  if (is_analytic() && r.is_analytic()) {
    return analytic(*function() + lambda * *r.function());
  }
  ScalarField a = interpolate(space);
  ScalarField b = r.interpolate(space);
  return from_field(a + lambda * b, has_hessian());
}

ObservationRegion ObservationRegion::disk(const Vec2& center, double radius, int n_angular) {
  if (!(radius > 0.0)) throw config_error("observation disk needs a positive radius");
  if (n_angular < 3) throw config_error("observation disk needs at least 3 angular nodes");
  using Rule = boost::math::quadrature::gauss<double, 24>;
  ObservationRegion e;
  e.center_ = center;
  e.radius_ = radius;
  // Rule stores the non-negative half of the symmetric node set on [-1, 1].
  std::vector<std::pair<double, double>> radial;
  for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
    const double x = Rule::abscissa()[i];
    const double w = Rule::weights()[i];
    radial.emplace_back(0.5 * radius * (1.0 + x), 0.5 * radius * w);
    if (x != 0.0) radial.emplace_back(0.5 * radius * (1.0 - x), 0.5 * radius * w);
  }
  std::sort(radial.begin(), radial.end());
  const double dtheta = 2.0 * std::numbers::pi / n_angular;
  for (const auto& [r, w] : radial) {
    for (int k = 0; k < n_angular; ++k) {
      const double theta = (k + 0.5) * dtheta;
      e.points_.push_back(center + r * Vec2(std::cos(theta), std::sin(theta)));
      e.weights_.push_back(w * r * dtheta);
    }
  }
  return e;
}

std::vector<Vec2> ObservationRegion::rim(int n) const {
  std::vector<Vec2> out;
  if (empty()) return out;
  for (int k = 0; k < n; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / n;
    out.push_back(center_ + radius_ * Vec2(std::cos(theta), std::sin(theta)));
  }
  return out;
}

bool ObservationRegion::contains(const Vec2& p) const {
  return !empty() && (p - center_).norm() < radius_;
}

std::vector<Vec2> find_zero_crossings(const LevelSet& ls, const Mesh& mesh) {
  const std::vector<double> values = ls.vertex_values(mesh);
  std::vector<Vec2> roots;
  for (const auto& e : mesh.edges()) {
    double va = values[static_cast<std::size_t>(e[0])];
    double vb = values[static_cast<std::size_t>(e[1])];
    if ((va < 0.0) == (vb < 0.0)) continue;
    Vec2 neg = mesh.vertex(e[0]);
    Vec2 pos = mesh.vertex(e[1]);
    if (va >= 0.0) std::swap(neg, pos);
    Vec2 mid = 0.5 * (neg + pos);
    for (int it = 0; it < 200; ++it) {
      mid = 0.5 * (neg + pos);
      const double gm = ls.value(mid);
      if (std::abs(gm) <= 1e-10 || (pos - neg).norm() < 1e-15) break;
      (gm < 0.0 ? neg : pos) = mid;
    }
    roots.push_back(mid);
  }
  return roots;
}

TriangleMask negative_triangles(const LevelSet& ls, const Mesh& mesh) {
  const std::vector<double> values = ls.vertex_values(mesh);
  TriangleMask mask(static_cast<std::size_t>(mesh.num_triangles()), 0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    mask[static_cast<std::size_t>(t)] = values[static_cast<std::size_t>(tri[0])] < 0.0 &&
                                        values[static_cast<std::size_t>(tri[1])] < 0.0 &&
                                        values[static_cast<std::size_t>(tri[2])] < 0.0;
  }
  return mask;
}

namespace {

TriangleMask flood_fill(const Mesh& mesh, const TriangleMask& negative, const std::vector<int>& seeds) {
  TriangleMask out(negative.size(), 0);
  std::vector<int> stack;
  for (int s : seeds) {
    if (negative[static_cast<std::size_t>(s)] && !out[static_cast<std::size_t>(s)]) {
      out[static_cast<std::size_t>(s)] = 1;
      stack.push_back(s);
    }
  }
  if (stack.empty()) throw admissibility_error("empty_domain", "anchor does not touch {g < 0}");
  while (!stack.empty()) {
    const int t = stack.back();
    stack.pop_back();
    for (int k = 0; k < 3; ++k) {
      const int n = mesh.neighbor(t, k);
      if (n >= 0 && negative[static_cast<std::size_t>(n)] && !out[static_cast<std::size_t>(n)]) {
        out[static_cast<std::size_t>(n)] = 1;
        stack.push_back(n);
      }
    }
  }
  return out;
}

}  // namespace

TriangleMask classify_domain(const LevelSet& ls, const Mesh& mesh, const ObservationRegion& anchor) {
  if (anchor.empty()) throw config_error("cannot anchor on an empty observation region");
  std::vector<int> seeds;
  for (const Vec2& p : anchor.points()) {
    if (auto loc = mesh.locate(p)) seeds.push_back(loc->triangle);
  }
  return flood_fill(mesh, negative_triangles(ls, mesh), seeds);
}

TriangleMask classify_domain(const LevelSet& ls, const Mesh& mesh, const Vec2& anchor) {
  const TriangleMask negative = negative_triangles(ls, mesh);
  std::vector<int> seeds;
  if (auto loc = mesh.locate(anchor); loc && negative[static_cast<std::size_t>(loc->triangle)]) {
    seeds.push_back(loc->triangle);
  } else {
    for (int t : mesh.triangles_near(anchor, mesh.h())) {
      if (negative[static_cast<std::size_t>(t)] && (mesh.centroid(t) - anchor).norm() <= mesh.h()) {
        seeds.push_back(t);
      }
    }
  }
  return flood_fill(mesh, negative, seeds);
}

double mask_area(const Mesh& mesh, const TriangleMask& mask) {
  double a = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (mask[static_cast<std::size_t>(t)]) a += mesh.area(t);
  }
  return a;
}

ScalarField project_constraint(const ScalarField& g, const ObservationRegion& region,
                               const LevelSet& g_region) {
  ScalarField out = g;
  if (region.empty()) return out;
  const auto& coords = g.space().dof_coordinates();
  for (int i = 0; i < g.space().size(); ++i) {
    const Vec2& x = coords[static_cast<std::size_t>(i)];
    if (region.contains(x)) out.coefficients()[i] = g_region.value(x);
  }
  return out;
}

LevelSet project_constraint(const LevelSet& g, const ObservationRegion& region,
                            const LevelSet& g_region, const SpacePtr& space) {
  return LevelSet::from_field(project_constraint(g.interpolate(space), region, g_region),
                              g.has_hessian());
}

AdmissibilityReport check_admissibility(const LevelSet& ls, const Mesh& mesh,
                                        const ObservationRegion& region, double m,
                                        const std::vector<TracedComponent>& components) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  AdmissibilityReport rep;
  rep.component_count = static_cast<int>(components.size());

  rep.min_gradient_on_curve = kInf;
  for (const auto& c : components) {
    for (const auto& s : c.samples) {
      rep.curve_samples.push_back(s.z);
      rep.min_gradient_on_curve = std::min(rep.min_gradient_on_curve, ls.gradient(s.z).norm());
    }
  }
  rep.gradient_ok = !components.empty() && rep.min_gradient_on_curve >= m;

  rep.min_on_box_boundary = kInf;
  // Each edge contributes its start vertex and midpoint; the edges form a loop.
  for (const auto& e : mesh.boundary_edges()) {
    for (const Vec2& p : {mesh.vertex(e[0]), Vec2(0.5 * (mesh.vertex(e[0]) + mesh.vertex(e[1])))}) {
      rep.boundary_samples.push_back(p);
      rep.min_on_box_boundary = std::min(rep.min_on_box_boundary, ls.value(p));
    }
  }
  rep.boundary_ok = rep.min_on_box_boundary > 0.0;

  rep.max_on_region = -kInf;
  std::vector<Vec2> region_points = region.points();
  if (!region.empty()) {
    const auto rim = region.rim();
    region_points.insert(region_points.end(), rim.begin(), rim.end());
  }
  for (const Vec2& p : region_points) {
    rep.region_samples.push_back(p);
    rep.max_on_region = std::max(rep.max_on_region, ls.value(p));
  }
  rep.region_ok = rep.max_on_region <= 0.0;
  return rep;
}

}  // namespace hamshape
