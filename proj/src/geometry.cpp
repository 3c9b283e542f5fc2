#include "hamshape/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "hamshape/error.hpp"

namespace hamshape {
namespace {

constexpr double kInsideTol = 1e-12;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Mesh

Mesh::Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  if (vertices_.empty() || triangles_.empty()) throw config_error("mesh needs vertices and triangles");
  const int nv = num_vertices();
  bounds_ = {vertices_[0].x(), vertices_[0].x(), vertices_[0].y(), vertices_[0].y()};
  for (const Vec2& v : vertices_) {
    bounds_.xmin = std::min(bounds_.xmin, v.x());
    bounds_.xmax = std::max(bounds_.xmax, v.x());
    bounds_.ymin = std::min(bounds_.ymin, v.y());
    bounds_.ymax = std::max(bounds_.ymax, v.y());
  }
  areas_.resize(triangles_.size());
  bary_grads_.resize(triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (int k : tri) {
      if (k < 0 || k >= nv) throw config_error("triangle references a missing vertex");
    }
    const Vec2 e1 = vertices_[static_cast<std::size_t>(tri[1])] - vertices_[static_cast<std::size_t>(tri[0])];
    const Vec2 e2 = vertices_[static_cast<std::size_t>(tri[2])] - vertices_[static_cast<std::size_t>(tri[0])];
    const double det = cross(e1, e2);
    if (!(det > 0.0)) {
      throw config_error("triangle " + std::to_string(t) + " has non-positive signed area");
    }
    areas_[t] = 0.5 * det;
    const Vec2 g1(e2.y() / det, -e2.x() / det);
    const Vec2 g2(-e1.y() / det, e1.x() / det);
    bary_grads_[t] = {-g1 - g2, g1, g2};
    h_ = std::max({h_, e1.norm(), e2.norm(), (e2 - e1).norm()});
  }
  build_topology();
  build_locator();
}

void Mesh::build_topology() {
  struct HalfEdge {
    long long key;
    int tri;
    int local;
  };
  const long long nv = num_vertices();
  std::vector<HalfEdge> half;
  half.reserve(triangles_.size() * 3);
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const int a = triangles_[t][static_cast<std::size_t>(k)];
      const int b = triangles_[t][static_cast<std::size_t>((k + 1) % 3)];
      half.push_back({std::min(a, b) * nv + std::max(a, b), static_cast<int>(t), k});
    }
  }
  std::sort(half.begin(), half.end(), [](const HalfEdge& l, const HalfEdge& r) {
    return l.key != r.key ? l.key < r.key : l.tri < r.tri;
  });
  tri_edges_.assign(triangles_.size(), {-1, -1, -1});
  neighbors_.assign(triangles_.size(), {-1, -1, -1});
  for (std::size_t i = 0; i < half.size();) {
    std::size_t j = i;
    while (j < half.size() && half[j].key == half[i].key) ++j;
    if (j - i > 2) throw config_error("non-manifold mesh edge");
    const int id = static_cast<int>(edges_.size());
    edges_.push_back({static_cast<int>(half[i].key / nv), static_cast<int>(half[i].key % nv)});
    for (std::size_t k = i; k < j; ++k) {
      tri_edges_[static_cast<std::size_t>(half[k].tri)][static_cast<std::size_t>(half[k].local)] = id;
    }
    if (j - i == 2) {
      neighbors_[static_cast<std::size_t>(half[i].tri)][static_cast<std::size_t>(half[i].local)] = half[i + 1].tri;
      neighbors_[static_cast<std::size_t>(half[i + 1].tri)][static_cast<std::size_t>(half[i + 1].local)] = half[i].tri;
    } else {
      const auto& tri = triangles_[static_cast<std::size_t>(half[i].tri)];
      boundary_edges_.push_back({tri[static_cast<std::size_t>(half[i].local)],
                                 tri[static_cast<std::size_t>((half[i].local + 1) % 3)]});
    }
    i = j;
  }
}

std::pair<int, int> Mesh::bin_of(const Vec2& p) const {
  const double fx = (p.x() - bounds_.xmin) / std::max(bounds_.width(), 1e-300) * bins_x_;
  const double fy = (p.y() - bounds_.ymin) / std::max(bounds_.height(), 1e-300) * bins_y_;
  const int ix = std::clamp(static_cast<int>(std::floor(fx)), 0, bins_x_ - 1);
  const int iy = std::clamp(static_cast<int>(std::floor(fy)), 0, bins_y_ - 1);
  return {ix, iy};
}

void Mesh::build_locator() {
  const int side = std::max(1, static_cast<int>(std::ceil(std::sqrt(num_triangles() / 2.0))));
  bins_x_ = side;
  bins_y_ = side;
  std::vector<std::vector<int>> bins(static_cast<std::size_t>(bins_x_ * bins_y_));
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& tri = triangle(t);
    Vec2 lo = vertex(tri[0]), hi = vertex(tri[0]);
    for (int k = 1; k < 3; ++k) {
      lo = lo.cwiseMin(vertex(tri[static_cast<std::size_t>(k)]));
      hi = hi.cwiseMax(vertex(tri[static_cast<std::size_t>(k)]));
    }
    const auto [x0, y0] = bin_of(lo);
    const auto [x1, y1] = bin_of(hi);
    for (int iy = y0; iy <= y1; ++iy) {
      for (int ix = x0; ix <= x1; ++ix) bins[static_cast<std::size_t>(iy * bins_x_ + ix)].push_back(t);
    }
  }
  bin_start_.assign(bins.size() + 1, 0);
  for (std::size_t b = 0; b < bins.size(); ++b) {
    bin_start_[b + 1] = bin_start_[b] + static_cast<int>(bins[b].size());
  }
  bin_triangles_.reserve(static_cast<std::size_t>(bin_start_.back()));
  for (const auto& b : bins) bin_triangles_.insert(bin_triangles_.end(), b.begin(), b.end());
}

Vec2 Mesh::centroid(int t) const {
  const auto& tri = triangle(t);
  return (vertex(tri[0]) + vertex(tri[1]) + vertex(tri[2])) / 3.0;
}

Vec2 Mesh::point(int t, const Barycentric& bary) const {
  const auto& tri = triangle(t);
  return bary[0] * vertex(tri[0]) + bary[1] * vertex(tri[1]) + bary[2] * vertex(tri[2]);
}

Barycentric Mesh::barycentric(int t, const Vec2& p) const {
  const auto& tri = triangle(t);
  const auto& g = barycentric_gradients(t);
  const Vec2 d = p - vertex(tri[0]);
  const double l1 = g[1].dot(d);
  const double l2 = g[2].dot(d);
  return {1.0 - l1 - l2, l1, l2};
}

std::optional<Location> Mesh::locate(const Vec2& p) const {
  const double tol = 1e-12 * std::max(bounds_.width(), bounds_.height());
  if (!bounds_.contains(p, tol)) return std::nullopt;
  const auto [ix, iy] = bin_of(p);
  const int b = iy * bins_x_ + ix;
  for (int k = bin_start_[static_cast<std::size_t>(b)]; k < bin_start_[static_cast<std::size_t>(b) + 1]; ++k) {
    const int t = bin_triangles_[static_cast<std::size_t>(k)];
    const Barycentric bary = barycentric(t, p);
    if (bary[0] >= -kInsideTol && bary[1] >= -kInsideTol && bary[2] >= -kInsideTol) {
      return Location{t, bary};
    }
  }
  return std::nullopt;
}

std::vector<int> Mesh::triangles_near(const Vec2& p, double radius) const {
  const auto [x0, y0] = bin_of(p - Vec2(radius, radius));
  const auto [x1, y1] = bin_of(p + Vec2(radius, radius));
  std::vector<int> out;
  for (int iy = y0; iy <= y1; ++iy) {
    for (int ix = x0; ix <= x1; ++ix) {
      const int b = iy * bins_x_ + ix;
      out.insert(out.end(), bin_triangles_.begin() + bin_start_[static_cast<std::size_t>(b)],
                 bin_triangles_.begin() + bin_start_[static_cast<std::size_t>(b) + 1]);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

MeshPtr build_rectangle_mesh(const Box& bounds, int n_per_side, MeshPattern pattern) {
  if (n_per_side < 2) throw config_error("n_per_side must be at least 2");
  if (!(bounds.width() > 0.0) || !(bounds.height() > 0.0)) {
    throw config_error("degenerate mesh bounds");
  }
  const int n = n_per_side;
  const double dx = bounds.width() / n;
  const double dy = bounds.height() / n;
  std::vector<Vec2> vertices;
  vertices.reserve(static_cast<std::size_t>((n + 1) * (n + 1) + (pattern == MeshPattern::kCrossed ? n * n : 0)));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      // Pin the last row/column to the exact bound.
      const double x = i == n ? bounds.xmax : bounds.xmin + i * dx;
      const double y = j == n ? bounds.ymax : bounds.ymin + j * dy;
      vertices.emplace_back(x, y);
    }
  }
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::array<int, 3>> triangles;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if (pattern == MeshPattern::kDiagonal) {
        triangles.push_back({a, b, c});
        triangles.push_back({a, c, d});
      } else {
        const int m = static_cast<int>(vertices.size());
        vertices.push_back(0.25 * (vertices[static_cast<std::size_t>(a)] + vertices[static_cast<std::size_t>(b)] +
                                   vertices[static_cast<std::size_t>(c)] + vertices[static_cast<std::size_t>(d)]));
        triangles.push_back({a, b, m});
        triangles.push_back({b, c, m});
        triangles.push_back({c, d, m});
        triangles.push_back({d, a, m});
      }
    }
  }
  return std::make_shared<const Mesh>(std::move(vertices), std::move(triangles));
}

// ---------------------------------------------------------------------------
// Quadrature

const TriangleQuadrature& TriangleQuadrature::degree2() {
  static const TriangleQuadrature rule{
      {{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0}, {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0}, {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}},
      {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
  return rule;
}

const TriangleQuadrature& TriangleQuadrature::degree5() {
  static const TriangleQuadrature rule = [] {
    const double s15 = std::sqrt(15.0);
    const double a1 = (6.0 - s15) / 21.0, b1 = 1.0 - 2.0 * a1, w1 = (155.0 - s15) / 1200.0;
    const double a2 = (6.0 + s15) / 21.0, b2 = 1.0 - 2.0 * a2, w2 = (155.0 + s15) / 1200.0;
    TriangleQuadrature q;
    q.points = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, {b1, a1, a1}, {a1, b1, a1}, {a1, a1, b1},
                {b2, a2, a2}, {a2, b2, a2}, {a2, a2, b2}};
    q.weights = {9.0 / 40.0, w1, w1, w1, w2, w2, w2};
    return q;
  }();
  return rule;
}

// ---------------------------------------------------------------------------
// Finite element space

FiniteElementSpace::FiniteElementSpace(MeshPtr mesh, int degree)
    : mesh_(std::move(mesh)), degree_(degree), local_size_(degree == 1 ? 3 : 6) {
  if (degree != 1 && degree != 2) throw config_error("only Lagrange degrees 1 and 2 are supported");
  const Mesh& m = *mesh_;
  const int nv = m.num_vertices();
  const int nt = m.num_triangles();
  dof_coords_ = m.vertices();
  if (degree_ == 2) {
    for (const auto& e : m.edges()) dof_coords_.push_back(0.5 * (m.vertex(e[0]) + m.vertex(e[1])));
  }
  element_dofs_.resize(static_cast<std::size_t>(nt * local_size_));
  for (int t = 0; t < nt; ++t) {
    int* dofs = element_dofs_.data() + static_cast<std::ptrdiff_t>(t) * local_size_;
    const auto& tri = m.triangle(t);
    for (int k = 0; k < 3; ++k) dofs[k] = tri[static_cast<std::size_t>(k)];
    if (degree_ == 2) {
      for (int k = 0; k < 3; ++k) dofs[3 + k] = nv + m.triangle_edges(t)[static_cast<std::size_t>(k)];
    }
  }
  on_boundary_.assign(dof_coords_.size(), 0);
  // Boundary dofs: endpoints of boundary edges plus, for P2, their midpoints.
  for (const auto& be : m.boundary_edges()) {
    on_boundary_[static_cast<std::size_t>(be[0])] = 1;
    on_boundary_[static_cast<std::size_t>(be[1])] = 1;
  }
  if (degree_ == 2) {
    for (int t = 0; t < nt; ++t) {
      for (int k = 0; k < 3; ++k) {
        if (m.neighbor(t, k) < 0) {
          on_boundary_[static_cast<std::size_t>(nv + m.triangle_edges(t)[static_cast<std::size_t>(k)])] = 1;
        }
      }
    }
  }
  for (std::size_t i = 0; i < on_boundary_.size(); ++i) {
    if (on_boundary_[i]) boundary_dofs_.push_back(static_cast<int>(i));
  }
  build_recovery();
}

void FiniteElementSpace::shape_values(const Barycentric& l, ShapeValues& out) const {
  if (degree_ == 1) {
    out[0] = l[0];
    out[1] = l[1];
    out[2] = l[2];
    return;
  }
  out[0] = l[0] * (2.0 * l[0] - 1.0);
  out[1] = l[1] * (2.0 * l[1] - 1.0);
  out[2] = l[2] * (2.0 * l[2] - 1.0);
  out[3] = 4.0 * l[0] * l[1];
  out[4] = 4.0 * l[1] * l[2];
  out[5] = 4.0 * l[2] * l[0];
}

void FiniteElementSpace::shape_gradients(int t, const Barycentric& l, ShapeGradients& out) const {
  const auto& g = mesh_->barycentric_gradients(t);
  if (degree_ == 1) {
    out[0] = g[0];
    out[1] = g[1];
    out[2] = g[2];
    return;
  }
  out[0] = (4.0 * l[0] - 1.0) * g[0];
  out[1] = (4.0 * l[1] - 1.0) * g[1];
  out[2] = (4.0 * l[2] - 1.0) * g[2];
  out[3] = 4.0 * (l[0] * g[1] + l[1] * g[0]);
  out[4] = 4.0 * (l[1] * g[2] + l[2] * g[1]);
  out[5] = 4.0 * (l[2] * g[0] + l[0] * g[2]);
}

const TriangleQuadrature& FiniteElementSpace::quadrature() const {
  return degree_ == 1 ? TriangleQuadrature::degree2() : TriangleQuadrature::degree5();
}

void FiniteElementSpace::build_recovery() {
  const Mesh& m = *mesh_;
  const int n = size();
  // Barycentric coordinates of the local dof nodes.
  static const std::array<Barycentric, 6> kNodes = {
      Barycentric{1, 0, 0}, Barycentric{0, 1, 0}, Barycentric{0, 0, 1},
      Barycentric{0.5, 0.5, 0}, Barycentric{0, 0.5, 0.5}, Barycentric{0.5, 0, 0.5}};
  std::vector<double> weight_sum(static_cast<std::size_t>(n), 0.0);
  for (int t = 0; t < m.num_triangles(); ++t) {
    for (int dof : element_dofs(t)) weight_sum[static_cast<std::size_t>(dof)] += m.area(t);
  }
  std::vector<Eigen::Triplet<double>> tx, ty;
  tx.reserve(static_cast<std::size_t>(m.num_triangles() * local_size_ * local_size_));
  ty.reserve(tx.capacity());
  ShapeGradients grads;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto dofs = element_dofs(t);
    for (int a = 0; a < local_size_; ++a) {
      const int row = dofs[static_cast<std::size_t>(a)];
      const double w = m.area(t) / weight_sum[static_cast<std::size_t>(row)];
      shape_gradients(t, kNodes[static_cast<std::size_t>(a)], grads);
      for (int b = 0; b < local_size_; ++b) {
        tx.emplace_back(row, dofs[static_cast<std::size_t>(b)], w * grads[static_cast<std::size_t>(b)].x());
        ty.emplace_back(row, dofs[static_cast<std::size_t>(b)], w * grads[static_cast<std::size_t>(b)].y());
      }
    }
  }
  recovery_x_.resize(n, n);
  recovery_y_.resize(n, n);
  recovery_x_.setFromTriplets(tx.begin(), tx.end());
  recovery_y_.setFromTriplets(ty.begin(), ty.end());
}

Vector FiniteElementSpace::interpolate(const ScalarFunction& f) const {
  Vector out(size());
  for (int i = 0; i < size(); ++i) out[i] = f.value(dof_coords_[static_cast<std::size_t>(i)]);
  return out;
}

// ---------------------------------------------------------------------------
// Fields

ScalarField::ScalarField(SpacePtr space, Vector coefficients)
    : space_(std::move(space)), coeffs_(std::move(coefficients)) {
  if (!space_) throw config_error("field without a space");
  if (coeffs_.size() != space_->size()) throw config_error("coefficient count does not match the space");
}

ScalarField ScalarField::zero(SpacePtr space) {
  const int n = space->size();
  return ScalarField(std::move(space), Vector::Zero(n));
}

ScalarField ScalarField::interpolate(SpacePtr space, const ScalarFunction& f) {
  Vector c = space->interpolate(f);
  return ScalarField(std::move(space), std::move(c));
}

double ScalarField::value(const Location& loc) const {
  ShapeValues phi;
  space_->shape_values(loc.bary, phi);
  const auto dofs = space_->element_dofs(loc.triangle);
  double v = 0.0;
  for (std::size_t a = 0; a < dofs.size(); ++a) v += phi[a] * coeffs_[dofs[a]];
  return v;
}

Vec2 ScalarField::gradient(const Location& loc) const {
  ShapeGradients grads;
  space_->shape_gradients(loc.triangle, loc.bary, grads);
  const auto dofs = space_->element_dofs(loc.triangle);
  Vec2 g = Vec2::Zero();
  for (std::size_t a = 0; a < dofs.size(); ++a) g += coeffs_[dofs[a]] * grads[a];
  return g;
}

double ScalarField::value(const Vec2& p) const { return value(locate_or_throw(space_->mesh(), p)); }

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  return ScalarField(a.space_, a.coeffs_ + b.coeffs_);
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  return ScalarField(a.space_, a.coeffs_ - b.coeffs_);
}

ScalarField operator*(double s, const ScalarField& a) { return ScalarField(a.space_, s * a.coeffs_); }

Mat2 VectorField::jacobian(const Location& loc) const {
  Mat2 j;
  j.row(0) = x.gradient(loc).transpose();
  j.row(1) = y.gradient(loc).transpose();
  return j;
}

Location locate_or_throw(const Mesh& mesh, const Vec2& p) {
  auto loc = mesh.locate(p);
  if (!loc) {
    throw numerical_error("outside_mesh", "point (" + format_double(p.x()) + ", " +
                                              format_double(p.y()) + ") lies outside the mesh");
  }
  return *loc;
}

double evaluate(const ScalarField& field, const Vec2& p) { return field.value(p); }

VectorField recover_gradient(const ScalarField& field) {
  const auto& space = field.space();
  return {ScalarField(field.space_ptr(), space.recovery_x() * field.coefficients()),
          ScalarField(field.space_ptr(), space.recovery_y() * field.coefficients())};
}

void write_mesh_csv(const Mesh& mesh, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream v(dir / "vertices.csv");
  v << "id,x,y\n";
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    v << i << ',' << format_double(mesh.vertex(i).x()) << ',' << format_double(mesh.vertex(i).y()) << '\n';
  }
  std::ofstream t(dir / "triangles.csv");
  t << "id,v0,v1,v2\n";
  for (int i = 0; i < mesh.num_triangles(); ++i) {
    const auto& tri = mesh.triangle(i);
    t << i << ',' << tri[0] << ',' << tri[1] << ',' << tri[2] << '\n';
  }
}

void write_field_csv(const ScalarField& field, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw numerical_error("io", "cannot write " + path.string());
  out << "dof_id,x,y,value\n";
  const auto& coords = field.space().dof_coordinates();
  for (int i = 0; i < field.space().size(); ++i) {
    out << i << ',' << format_double(coords[static_cast<std::size_t>(i)].x()) << ','
        << format_double(coords[static_cast<std::size_t>(i)].y()) << ','
        << format_double(field.coefficients()[i]) << '\n';
  }
}

ScalarField read_field_csv(SpacePtr space, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  Vector c = Vector::Zero(space->size());
  int count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id, x, y, value;
    std::getline(row, id, ',');
    std::getline(row, x, ',');
    std::getline(row, y, ',');
    std::getline(row, value, ',');
    const int i = std::stoi(id);
    if (i < 0 || i >= space->size()) throw config_error("dof id out of range in " + path.string());
    c[i] = std::stod(value);
    ++count;
  }
  if (count != space->size()) throw config_error("field file " + path.string() + " does not match the space");
  return ScalarField(std::move(space), std::move(c));
}

}  // namespace hamshape
