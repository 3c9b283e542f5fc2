#pragma once

#include <optional>
#include <vector>

#include "hamshape/levelset.hpp"

namespace hamshape {

struct TracerOptions {
  double h = 0.05;                    // length scale of one step
  double step_factor = 0.125;         // dt = step_factor * h / gradient scale
  std::optional<double> time_step;    // fixed dt, bypasses the rule above
  std::optional<double> gradient_scale;  // defaults to |grad g(x0)|
  double min_gradient = 1e-3;         // m
  long max_steps = 1000000;
  double capture_factor = 0.1;        // r_cap = capture_factor * dt * max|z'|
  double capture_floor = 0.0;         // lower bound on r_cap (length units)
  double tube_factor = 2.0;           // seed de-duplication radius, units of h
};

struct TraceSample {
  double t = 0.0;
  Vec2 z = Vec2::Zero();
  Vec2 dz = Vec2::Zero();
};

/// One closed trajectory of z' = (-d2 g, d1 g) started at x0. Samples sit on
/// the fixed grid k*dt followed by one closing step of length final_step, so
/// the last sample is at t = period.
struct TracedComponent {
  Vec2 start = Vec2::Zero();
  std::vector<TraceSample> samples;
  double period = 0.0;
  double length = 0.0;
  double time_step = 0.0;
  double final_step = 0.0;
  double closure_gap = 0.0;  // |z(T) - x0|
};

// (-d2 g, d1 g)
inline Vec2 hamiltonian_field(const Vec2& grad) { return {-grad.y(), grad.x()}; }

TracedComponent trace_component(const LevelSet& ls, const Vec2& x0, const TracerOptions& opts);

// Errors are re-thrown with the seed index prepended to the message.
std::vector<TracedComponent> trace_all(const LevelSet& ls, const std::vector<Vec2>& seeds,
                                       const TracerOptions& opts);

// Scan, seed and trace in one pass; the gradient scale (and so dt) is shared
// by all components.
std::vector<TracedComponent> detect_components(const LevelSet& ls, const Mesh& mesh,
                                               const TracerOptions& opts);

struct VariationSample {
  double t = 0.0;
  Vec2 w = Vec2::Zero();
  Vec2 dw = Vec2::Zero();
};

struct VariationTrajectory {
  std::vector<VariationSample> samples;
  const Vec2& final_value() const { return samples.back().w; }
};

// Linearization of the trajectory in the direction g + lambda r, integrated
// with the same RK4 steps as `comp`.
VariationTrajectory solve_variation(const LevelSet& g, const LevelSet& r,
                                    const TracedComponent& comp);

// -w_i(T) / z_i'(T) with i the larger velocity component (ties pick i = 2).
double period_derivative(const TracedComponent& comp, const VariationTrajectory& w,
                         double min_gradient = 1e-3);

// 1/2 closed-polygon integral of (z1 dz2 - z2 dz1) over the samples.
double signed_area(const TracedComponent& comp);

// Minimum distance from p to the closed polyline of `comp`.
double distance_to_curve(const TracedComponent& comp, const Vec2& p);

}  // namespace hamshape
