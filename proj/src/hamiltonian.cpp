#include "hamshape/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hamshape/error.hpp"

namespace hamshape {
namespace {

Vec2 rotate(const Vec2& v) { return {-v.y(), v.x()}; }

class Flow {
 public:
  Flow(const LevelSet& ls, double m) : ls_(ls), m_(m) {}

  Vec2 operator()(const Vec2& z) const {
    const Vec2 grad = ls_.gradient(z);
    if (grad.norm() < m_) {
      throw admissibility_error("degenerate_gradient",
                                "|grad g| = " + std::to_string(grad.norm()) + " below m on the trajectory");
    }
    return hamiltonian_field(grad);
  }

  Vec2 step(const Vec2& z, double dt) const {
    const Vec2 k1 = (*this)(z);
    const Vec2 k2 = (*this)(z + 0.5 * dt * k1);
    const Vec2 k3 = (*this)(z + 0.5 * dt * k2);
    const Vec2 k4 = (*this)(z + dt * k3);
    return z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

 private:
  const LevelSet& ls_;
  double m_;
};

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + s * d)).norm();
}

}  // namespace

TracedComponent trace_component(const LevelSet& ls, const Vec2& x0, const TracerOptions& opts) {
  const Flow flow(ls, opts.min_gradient);
  const Vec2 v0 = flow(x0);
  const double scale = opts.gradient_scale.value_or(v0.norm());
  const double dt = opts.time_step ? *opts.time_step : opts.step_factor * opts.h / scale;
  if (!(dt > 0.0) || !std::isfinite(dt)) throw config_error("tracer time step must be positive");

  auto section = [&](const Vec2& z) { return (z - x0).dot(v0); };

  TracedComponent comp;
  comp.start = x0;
  comp.time_step = dt;
  comp.samples.push_back({0.0, x0, v0});
  double vmax = v0.norm();
  const double t_min = 10.0 * dt;

  Vec2 z = x0;
  for (long k = 0; k < opts.max_steps; ++k) {
    const Vec2 next = flow.step(z, dt);
    const double t_next = (k + 1) * dt;
    const double s0 = section(z);
    const double s1 = section(next);
    const double r_cap = std::max(opts.capture_factor * dt * vmax, opts.capture_floor);
    if (t_next >= t_min && s0 < 0.0 && s1 >= 0.0 &&
        (z - x0).norm() <= r_cap + 2.0 * dt * vmax) {
      // Bisection on the length of one RK4 step from z onto the section.
      double lo = 0.0, hi = dt;
      for (int it = 0; it < 80 && hi - lo > 1e-17 * dt; ++it) {
        const double mid = 0.5 * (lo + hi);
        (section(flow.step(z, mid)) < 0.0 ? lo : hi) = mid;
      }
      const double tau = 0.5 * (lo + hi);
      const Vec2 end = flow.step(z, tau);
      if ((end - x0).norm() <= r_cap) {
        const double period = k * dt + tau;
        comp.samples.push_back({period, end, flow(end)});
        comp.period = period;
        comp.final_step = tau;
        comp.closure_gap = (end - x0).norm();
        for (std::size_t i = 0; i + 1 < comp.samples.size(); ++i) {
          const double h = comp.samples[i + 1].t - comp.samples[i].t;
          comp.length += 0.5 * h * (comp.samples[i].dz.norm() + comp.samples[i + 1].dz.norm());
        }
        return comp;
      }
    }
    z = next;
    const Vec2 dz = flow(z);
    vmax = std::max(vmax, dz.norm());
    comp.samples.push_back({t_next, z, dz});
  }
  throw numerical_error("no_return", "trajectory from (" + std::to_string(x0.x()) + ", " +
                                         std::to_string(x0.y()) + ") did not close within " +
                                         std::to_string(opts.max_steps) + " steps");
}

std::vector<TracedComponent> trace_all(const LevelSet& ls, const std::vector<Vec2>& seeds,
                                       const TracerOptions& opts) {
  std::vector<TracedComponent> out;
  out.reserve(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    try {
      out.push_back(trace_component(ls, seeds[i], opts));
    } catch (const Error& e) {
      throw Error(e.kind(), e.code(), "seed " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<TracedComponent> detect_components(const LevelSet& ls, const Mesh& mesh,
                                               const TracerOptions& opts) {
  const std::vector<Vec2> roots = find_zero_crossings(ls, mesh);
  if (roots.empty()) throw admissibility_error("no_zero_set", "g has no sign change on the mesh");
  double scale = 0.0;
  for (const Vec2& p : roots) {
    const double n = ls.gradient(p).norm();
    if (n < opts.min_gradient) {
      throw admissibility_error("degenerate_gradient",
                                "|grad g| = " + std::to_string(n) + " below m at a boundary root");
    }
    scale = std::max(scale, n);
  }
  TracerOptions local = opts;
  if (!local.gradient_scale) local.gradient_scale = scale;

  const double tube = opts.tube_factor * mesh.h();
  std::vector<char> claimed(roots.size(), 0);
  std::vector<TracedComponent> out;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (claimed[i]) continue;
    TracedComponent comp;
    try {
      comp = trace_component(ls, roots[i], local);
    } catch (const Error& e) {
      throw Error(e.kind(), e.code(), "component " + std::to_string(out.size()) + ": " + e.what());
    }
    Vec2 lo = comp.samples.front().z, hi = lo;
    for (const auto& s : comp.samples) {
      lo = lo.cwiseMin(s.z);
      hi = hi.cwiseMax(s.z);
    }
    for (std::size_t j = i; j < roots.size(); ++j) {
      if (claimed[j]) continue;
      const Vec2& p = roots[j];
      if (p.x() < lo.x() - tube || p.x() > hi.x() + tube || p.y() < lo.y() - tube || p.y() > hi.y() + tube) {
        continue;
      }
      if (distance_to_curve(comp, p) <= tube) claimed[j] = 1;
    }
    claimed[i] = 1;
    out.push_back(std::move(comp));
  }
  return out;
}

std::vector<Vec2> find_boundary_seeds(const LevelSet& ls, const Mesh& mesh, const TracerOptions& opts) {
  std::vector<Vec2> seeds;
  for (const auto& c : detect_components(ls, mesh, opts)) seeds.push_back(c.start);
  return seeds;
}

VariationTrajectory solve_variation(const LevelSet& g, const LevelSet& r, const TracedComponent& comp) {
  if (!g.has_hessian()) {
    throw numerical_error("missing_hessian", "system in variations needs second derivatives of g");
  }
  struct State {
    Vec2 z;
    Vec2 w;
  };
  auto rhs = [&](const State& s) {
    const LevelSample gs = g.sample(s.z, true);
    const Vec2 dr = r.gradient(s.z);
    return State{hamiltonian_field(gs.gradient), rotate(gs.hessian * s.w + dr)};
  };
  auto step = [&](const State& s, double dt) {
    const State k1 = rhs(s);
    const State k2 = rhs({s.z + 0.5 * dt * k1.z, s.w + 0.5 * dt * k1.w});
    const State k3 = rhs({s.z + 0.5 * dt * k2.z, s.w + 0.5 * dt * k2.w});
    const State k4 = rhs({s.z + dt * k3.z, s.w + dt * k3.w});
    return State{s.z + dt / 6.0 * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z),
                 s.w + dt / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w)};
  };

  VariationTrajectory out;
  out.samples.reserve(comp.samples.size());
  State s{comp.start, Vec2::Zero()};
  out.samples.push_back({0.0, s.w, rhs(s).w});
  const std::size_t n = comp.samples.size();
  for (std::size_t k = 1; k < n; ++k) {
    const double dt = k + 1 == n ? comp.final_step : comp.time_step;
    s = step(s, dt);
    out.samples.push_back({comp.samples[k].t, s.w, rhs(s).w});
  }
  return out;
}

double period_derivative(const TracedComponent& comp, const VariationTrajectory& w, double min_gradient) {
  const Vec2& v = comp.samples.back().dz;
  if (v.norm() < min_gradient) {
    throw numerical_error("degenerate_velocity", "|z'(T)| below m");
  }
  const int i = std::abs(v.x()) > std::abs(v.y()) ? 0 : 1;
  return -w.final_value()[i] / v[i];
}

double signed_area(const TracedComponent& comp) {
  double a = 0.0;
  const auto& s = comp.samples;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec2& p = s[i].z;
    const Vec2& q = s[(i + 1) % s.size()].z;
    a += p.x() * q.y() - p.y() * q.x();
  }
  return 0.5 * a;
}

double distance_to_curve(const TracedComponent& comp, const Vec2& p) {
  double best = std::numeric_limits<double>::infinity();
  const auto& s = comp.samples;
  for (std::size_t i = 0; i < s.size(); ++i) {
    best = std::min(best, segment_distance(p, s[i].z, s[(i + 1) % s.size()].z));
  }
  return best;
}

}  // namespace hamshape
