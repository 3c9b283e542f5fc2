#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hamshape/cost.hpp"
#include "hamshape/hamiltonian.hpp"
#include "hamshape/levelset.hpp"
#include "hamshape/pde.hpp"

namespace hamshape {

enum class DescentVariant { kI, kII };

struct OptimizerSettings {
  double rho = 0.8;
  int max_pow = 30;
  double tol = 1e-6;
  int max_iter = 50;
  DescentVariant variant = DescentVariant::kII;
  bool fix_geometry = false;  // r = 0: optimize the control only
  int threads = 1;
  int max_intermediate = 4;  // rejected improving candidates kept per iteration
  TracerOptions tracer;
};

/// Everything that stays fixed during a run: the discretization, the data of
/// the state equation and the cost, and the optional projection onto E.
class ShapeProblem {
 public:
  ShapeProblem(SpacePtr space, ScalarFunction f, CostProblem cost,
               std::optional<LevelSet> g_region = std::nullopt);

  const FiniteElementSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  const Mesh& mesh() const { return space_->mesh(); }
  const ScalarFunction& source() const { return f_; }
  const CostProblem& cost() const { return cost_; }
  const EllipticOperator& dirichlet() const { return dirichlet_; }
  const EllipticOperator& natural() const { return natural_; }
  bool has_projection() const { return g_region_.has_value() && !cost_.region.empty(); }

  // Nodal projection onto {g = g_E in E}; identity without E.
  ScalarField project(const ScalarField& g) const;

 private:
  SpacePtr space_;
  ScalarFunction f_;
  CostProblem cost_;
  std::optional<LevelSet> g_region_;
  EllipticOperator dirichlet_;
  EllipticOperator natural_;
};

/// (g, u) with everything derived from it.
struct Evaluation {
  LevelSet g;
  ScalarField u;
  ScalarField y;
  std::vector<TracedComponent> components;
  CostBreakdown cost;
};

// Traces the boundary, checks g > 0 on the box boundary, solves the state
// and evaluates the cost. Throws on any failure.
Evaluation evaluate(const ShapeProblem& problem, const ScalarField& g, const ScalarField& u,
                    const TracerOptions& tracer);

struct DescentDirection {
  ScalarField p;
  ScalarField r;
  ScalarField v;
  DescentVariant variant = DescentVariant::kII;
  double predicted = 0.0;  // q-terms of the derivative, evaluated as load . q
};

DescentDirection descent_direction(const ShapeProblem& problem, const Evaluation& state,
                                   DescentVariant variant, bool fix_geometry = false);

struct Candidate {
  int index = 0;
  double lambda = 0.0;
  bool ok = false;
  std::string error;
  CostBreakdown cost;
  int components = 0;
};

struct LineSearchResult {
  std::vector<Candidate> candidates;
  std::optional<int> accepted;         // index into candidates
  std::vector<Evaluation> evaluations; // one per ok candidate, same order
  std::vector<int> evaluation_of;      // candidate -> evaluations index or -1
};

// Index of the smallest cost strictly below `current` among ok candidates
// (ordered by decreasing lambda, so ties go to the larger step).
std::optional<int> select_step(const std::vector<Candidate>& candidates, double current);

// Evaluates J(Pi(G + lambda R), U + lambda V) for lambda = rho^i, i < max_pow,
// and picks the smallest cost strictly below the current one (ties go to
// the larger lambda).
LineSearchResult line_search(const ShapeProblem& problem, const Evaluation& state,
                             const DescentDirection& dir, const OptimizerSettings& settings);

struct LogRow {
  int k = 0;
  int sub_step = 0;
  CostBreakdown cost;
  double lambda = 0.0;
  bool accepted = false;
  bool ok = true;
  int components = 0;
  std::string error;  // set when the candidate could not be evaluated
};

struct Configuration {
  std::string label;
  int k = 0;
  int sub_step = 0;
  double lambda = 0.0;
  bool accepted = false;  // false for intermediate line-search configurations
  Evaluation state;
};

struct OptimizationResult {
  std::vector<LogRow> log;
  std::vector<Evaluation> iterates;         // accepted states, k = 0, 1, ...
  std::vector<double> predicted;            // descent certificate per iteration
  std::vector<Configuration> configurations;  // accepted + improving candidates
  std::vector<int> component_counts;        // every successful evaluation, in order
  std::string stop_reason;
};

OptimizationResult optimize(const ShapeProblem& problem, const ScalarField& g0, const ScalarField& u0,
                            const OptimizerSettings& settings);

}  // namespace hamshape
