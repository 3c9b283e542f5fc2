#pragma once

#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "hamshape/app.hpp"

namespace hamshape::testing_support {

inline RunConfig preset(const std::string& name, int n) {
  RunConfig c = load_config(name, std::nullopt);
  c.n_per_side = n;
  return c;
}

struct RandomPair {
  std::string g;
  std::string u;
};

// A rotated, wobbly ellipse around the origin, optionally with a hole, and a
// smooth control. With `keep_origin` the ellipse always contains the disk of
// radius 0.5 and there is no hole, so the observation region stays inside.
inline RandomPair random_pair(std::mt19937& rng, bool keep_origin) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto in = [&](double a, double b) { return a + (b - a) * unit(rng); };
  const double cx = in(-0.3, 0.3), cy = in(-0.3, 0.3);
  const double a = in(1.0, 2.0), b = in(1.0, 2.0), phi = in(0.0, 3.14159);
  const double wobble = in(-0.08, 0.08);
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "((cos(%.6f)*(x1-(%.6f)) + sin(%.6f)*(x2-(%.6f)))/%.6f)^2 + "
                "((-sin(%.6f)*(x1-(%.6f)) + cos(%.6f)*(x2-(%.6f)))/%.6f)^2 - 1 + %.6f*sin(2*x1)*cos(x2)",
                phi, cx, phi, cy, a, phi, cx, phi, cy, b, wobble);
  std::string g = buf;
  if (!keep_origin && unit(rng) < 0.5) {
    const double t = in(0.0, 6.28318);
    const double hx = cx + 0.4 * std::cos(t), hy = cy + 0.4 * std::sin(t);
    std::snprintf(buf, sizeof buf, "max(%s, 0.09 - (x1-(%.6f))^2 - (x2-(%.6f))^2)", g.c_str(), hx, hy);
    g = buf;
  }
  std::snprintf(buf, sizeof buf, "%.6f + %.6f*x1 + %.6f*x2 + %.6f*sin(x1*x2)", in(-1.0, 1.0), in(-0.5, 0.5),
                in(-0.5, 0.5), in(-0.5, 0.5));
  return {g, buf};
}

// sqrt(int (g_+ p)^2) over D.
inline double positive_part_norm(const LevelSet& g, const ScalarField& p) {
  const double sq = integrate(p.space(), [&](const Location& loc, const Vec2&) {
    const double v = positive_part(g.value(p.space().mesh(), loc)) * p.value(loc);
    return v * v;
  });
  return std::sqrt(sq);
}

}  // namespace hamshape::testing_support
