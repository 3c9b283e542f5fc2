#include "hamshape/cost.hpp"

#include <cmath>
#include <string>

#include "hamshape/error.hpp"

namespace hamshape {

CostFunctions CostFunctions::tracking(const ScalarFunction& y_d, bool distributed, bool boundary) {
  CostFunctions cf;
  auto value = [y_d](const Vec2& x, double y) {
    const double d = y - y_d.value(x);
    return 0.5 * d * d;
  };
  auto dy = [y_d](const Vec2& x, double y) { return y - y_d.value(x); };
  if (distributed) {
    cf.J = value;
    cf.dJ_dy = dy;
  }
  if (boundary) {
    cf.j = value;
    cf.dj_dy = dy;
    cf.dj_dx = [y_d](const Vec2& x, double y) {
      const Jet d = y_d(x);
      return Vec2(-(y - d.value) * d.gradient());
    };
  }
  return cf;
}

namespace {

// Trapezoid weight of sample k: half the lengths of the adjacent time steps.
double trapezoid_weight(const std::vector<TraceSample>& s, std::size_t k) {
  double w = 0.0;
  if (k > 0) w += 0.5 * (s[k].t - s[k - 1].t);
  if (k + 1 < s.size()) w += 0.5 * (s[k + 1].t - s[k].t);
  return w;
}

void check_speed(const TraceSample& s, double m) {
  if (s.dz.norm() < m) {
    throw admissibility_error("degenerate_gradient",
                              "|grad g| = " + std::to_string(s.dz.norm()) + " below m on the boundary");
  }
}

}  // namespace

double boundary_integral(const std::vector<TracedComponent>& components,
                         const std::function<double(const TraceSample&)>& integrand) {
  double sum = 0.0;
  for (const auto& c : components) {
    const auto& s = c.samples;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      const double h = s[i + 1].t - s[i].t;
      sum += 0.5 * h * (integrand(s[i]) * s[i].dz.norm() + integrand(s[i + 1]) * s[i + 1].dz.norm());
    }
  }
  return sum;
}

CostBreakdown evaluate_cost(const ScalarField& y, const std::vector<TracedComponent>& components,
                            const CostProblem& problem) {
  if (!(problem.epsilon > 0.0)) throw config_error("epsilon must be positive");
  const Mesh& mesh = y.space().mesh();
  const VectorField gy = recover_gradient(y);
  const CostFunctions& cf = problem.functions;

  CostBreakdown out;
  out.epsilon = problem.epsilon;
  if (cf.has_distributed()) {
    const auto& pts = problem.region.points();
    const auto& wts = problem.region.weights();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      out.t1 += wts[i] * cf.J(pts[i], y.value(locate_or_throw(mesh, pts[i])));
    }
  }
  for (const auto& c : components) {
    const auto& s = c.samples;
    for (std::size_t k = 0; k < s.size(); ++k) {
      check_speed(s[k], problem.min_gradient);
      const double w = trapezoid_weight(s, k) * s[k].dz.norm();
      const Location loc = locate_or_throw(mesh, s[k].z);
      if (cf.has_boundary()) out.t2 += w * cf.j(s[k].z, y.value(loc));
      const double flux = gy.value(loc).dot(unit_normal(s[k])) - problem.delta.value(s[k].z);
      out.t3 += w * flux * flux;
    }
  }
  out.total = out.t1 + out.t2 + out.t3 / out.epsilon;
  return out;
}

Vector adjoint_load(const ScalarField& y, const std::vector<TracedComponent>& components,
                    const CostProblem& problem) {
  const FiniteElementSpace& V = y.space();
  const Mesh& mesh = V.mesh();
  const VectorField gy = recover_gradient(y);
  const CostFunctions& cf = problem.functions;
  Vector load = Vector::Zero(V.size());
  Vector ax = Vector::Zero(V.size());
  Vector ay = Vector::Zero(V.size());
  ShapeValues phi;

  auto scatter = [&](Vector& target, const Location& loc, double weight) {
    V.shape_values(loc.bary, phi);
    const auto dofs = V.element_dofs(loc.triangle);
    for (std::size_t a = 0; a < dofs.size(); ++a) target[dofs[a]] += weight * phi[a];
  };

  if (cf.has_distributed()) {
    const auto& pts = problem.region.points();
    const auto& wts = problem.region.weights();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Location loc = locate_or_throw(mesh, pts[i]);
      scatter(load, loc, wts[i] * cf.dJ_dy(pts[i], y.value(loc)));
    }
  }
  for (const auto& c : components) {
    const auto& s = c.samples;
    for (std::size_t k = 0; k < s.size(); ++k) {
      check_speed(s[k], problem.min_gradient);
      const double w = trapezoid_weight(s, k) * s[k].dz.norm();
      const Location loc = locate_or_throw(mesh, s[k].z);
      if (cf.has_boundary()) scatter(load, loc, w * cf.dj_dy(s[k].z, y.value(loc)));
      const Vec2 nu = unit_normal(s[k]);
      const double flux = gy.value(loc).dot(nu) - problem.delta.value(s[k].z);
      const double c2 = 2.0 / problem.epsilon * w * flux;
      scatter(ax, loc, c2 * nu.x());
      scatter(ay, loc, c2 * nu.y());
    }
  }
  // The recovered gradient is linear in the coefficients, so its adjoint is
  // the transposed recovery map.
  load += V.recovery_x().transpose() * ax + V.recovery_y().transpose() * ay;
  return load;
}

double directional_derivative(const DerivativeInputs& in, const CostProblem& problem) {
  if (!in.y || !in.q || !in.g || !in.r || !in.components || !in.variations || !in.thetas) {
    throw config_error("directional derivative inputs are incomplete");
  }
  const ScalarField& y = *in.y;
  const ScalarField& q = *in.q;
  const Mesh& mesh = y.space().mesh();
  const VectorField gy = recover_gradient(y);
  const VectorField gq = recover_gradient(q);
  const CostFunctions& cf = problem.functions;

  double d1 = 0.0;
  if (cf.has_distributed()) {
    const auto& pts = problem.region.points();
    const auto& wts = problem.region.weights();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Location loc = locate_or_throw(mesh, pts[i]);
      d1 += wts[i] * cf.dJ_dy(pts[i], y.value(loc)) * q.value(loc);
    }
  }

  double d2 = 0.0;
  double d3 = 0.0;
  for (std::size_t c = 0; c < in.components->size(); ++c) {
    const auto& s = (*in.components)[c].samples;
    const auto& var = (*in.variations)[c].samples;
    const double theta = (*in.thetas)[c];
    if (var.size() != s.size()) throw config_error("variation and trace grids differ");
    const std::size_t last = s.size() - 1;

    // Integrand times speed and its derivative at sample k.
    auto local = [&](std::size_t k, double& f2, double& f3, double& df2, double& df3) {
      const TraceSample& smp = s[k];
      check_speed(smp, problem.min_gradient);
      Vec2 w = var[k].w;
      Vec2 ddz = var[k].dw;
      if (k == last) {
        // The closing node also moves with the period.
        const Mat2 hg = in.g->sample(smp.z, true).hessian;
        w += theta * smp.dz;
        ddz += theta * hamiltonian_field(hg * smp.dz);
      }
      const double speed = smp.dz.norm();
      const double dspeed = smp.dz.dot(ddz) / speed;
      const Location loc = locate_or_throw(mesh, smp.z);

      f2 = df2 = 0.0;
      if (cf.has_boundary()) {
        const double yv = y.value(loc);
        const double jv = cf.j(smp.z, yv);
        const double dj = cf.dj_dx(smp.z, yv).dot(w) +
                          cf.dj_dy(smp.z, yv) * (y.gradient(loc).dot(w) + q.value(loc));
        f2 = jv * speed;
        df2 = dj * speed + jv * dspeed;
      }

      const Vec2 nu = unit_normal(smp);
      const Vec2 dgrad(ddz.y(), -ddz.x());
      const Vec2 dnu = (dgrad - nu * nu.dot(dgrad)) / speed;
      const Jet delta = problem.delta(smp.z);
      const Vec2 ry = gy.value(loc);
      const double p = ry.dot(nu) - delta.value;
      const double dp = (gy.jacobian(loc) * w + gq.value(loc)).dot(nu) + ry.dot(dnu) -
                        delta.gradient().dot(w);
      f3 = p * p * speed;
      df3 = 2.0 * p * dp * speed + p * p * dspeed;
    };

    double f2_prev = 0.0, f3_prev = 0.0;
    for (std::size_t k = 0; k <= last; ++k) {
      double f2, f3, df2, df3;
      local(k, f2, f3, df2, df3);
      const double wk = trapezoid_weight(s, k);
      d2 += wk * df2;
      d3 += wk * df3;
      if (k == last) {
        // d(final step)/d(lambda) = theta.
        d2 += 0.5 * theta * (f2_prev + f2);
        d3 += 0.5 * theta * (f3_prev + f3);
      }
      f2_prev = f2;
      f3_prev = f3;
    }
  }
  return d1 + d2 + d3 / problem.epsilon;
}

}  // namespace hamshape
