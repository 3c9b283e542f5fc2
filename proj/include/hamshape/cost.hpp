#pragma once

#include <functional>
#include <vector>

#include "hamshape/geometry.hpp"
#include "hamshape/hamiltonian.hpp"
#include "hamshape/levelset.hpp"

namespace hamshape {

/// Integrands of the distributed term J(x, y) and the boundary term j(x, y)
/// with the partial derivatives the adjoint and the directional derivative
/// need. Unset members mean the term is absent.
struct CostFunctions {
  using Scalar = std::function<double(const Vec2&, double)>;
  using Gradient = std::function<Vec2(const Vec2&, double)>;

  Scalar J;
  Scalar dJ_dy;
  Scalar j;
  Scalar dj_dy;
  Gradient dj_dx;

  bool has_distributed() const { return static_cast<bool>(J); }
  bool has_boundary() const { return static_cast<bool>(j); }

  // 1/2 (y - y_d)^2 for the selected terms.
  static CostFunctions tracking(const ScalarFunction& y_d, bool distributed, bool boundary);
};

struct CostProblem {
  ObservationRegion region;
  CostFunctions functions;
  ScalarFunction delta;  // Neumann data
  double epsilon = 1.0;
  double min_gradient = 1e-3;
};

struct CostBreakdown {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;  // without the 1/epsilon factor
  double total = 0.0;
  double epsilon = 1.0;
};

// Sum over components of the trapezoid rule for integrand(sample) * |z'|.
double boundary_integral(const std::vector<TracedComponent>& components,
                         const std::function<double(const TraceSample&)>& integrand);

// Outward unit normal grad g / |grad g| read off the stored velocity.
inline Vec2 unit_normal(const TraceSample& s) { return Vec2(s.dz.y(), -s.dz.x()) / s.dz.norm(); }

// The penalty uses the recovered gradient of y so the flux is continuous
// along the curve.
CostBreakdown evaluate_cost(const ScalarField& y, const std::vector<TracedComponent>& components,
                            const CostProblem& problem);

// Load vector of the simplified adjoint: the derivative of the discrete cost
// with respect to the state coefficients.
Vector adjoint_load(const ScalarField& y, const std::vector<TracedComponent>& components,
                    const CostProblem& problem);

struct DerivativeInputs {
  const ScalarField* y = nullptr;
  const ScalarField* q = nullptr;  // linearized state
  const LevelSet* g = nullptr;
  const LevelSet* r = nullptr;
  const std::vector<TracedComponent>* components = nullptr;
  const std::vector<VariationTrajectory>* variations = nullptr;
  const std::vector<double>* thetas = nullptr;
};

// Derivative of evaluate_cost along (g + lambda r, u + lambda v) with the
// trace started at fixed points, assembled from q, w and theta.
double directional_derivative(const DerivativeInputs& in, const CostProblem& problem);

}  // namespace hamshape
