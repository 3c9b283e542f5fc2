#include "hamshape/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "hamshape/error.hpp"

namespace hamshape {

ShapeProblem::ShapeProblem(SpacePtr space, ScalarFunction f, CostProblem cost,
                           std::optional<LevelSet> g_region)
    : space_(std::move(space)),
      f_(std::move(f)),
      cost_(std::move(cost)),
      g_region_(std::move(g_region)),
      dirichlet_(space_, BoundaryCondition::kDirichlet),
      natural_(space_, BoundaryCondition::kNatural) {}

ScalarField ShapeProblem::project(const ScalarField& g) const {
  if (!has_projection()) return g;
  return project_constraint(g, cost_.region, *g_region_);
}

Evaluation evaluate(const ShapeProblem& problem, const ScalarField& g, const ScalarField& u,
                    const TracerOptions& tracer) {
  Evaluation e;
  e.g = LevelSet::from_field(g);
  e.u = u;
  const Mesh& mesh = problem.mesh();
  for (const auto& edge : mesh.boundary_edges()) {
    const Vec2 mid = 0.5 * (mesh.vertex(edge[0]) + mesh.vertex(edge[1]));
    if (!(e.g.value(mid) > 0.0)) {
      throw admissibility_error("boundary_contact", "g is not positive on the boundary of D");
    }
  }
  e.components = detect_components(e.g, mesh, tracer);
  e.y = solve_state(problem.dirichlet(), e.g, u, problem.source());
  e.cost = evaluate_cost(e.y, e.components, problem.cost());
  return e;
}

DescentDirection descent_direction(const ShapeProblem& problem, const Evaluation& state,
                                   DescentVariant variant, bool fix_geometry) {
  DescentDirection dir;
  dir.variant = variant;
  const Vector load = adjoint_load(state.y, state.components, problem.cost());
  dir.p = solve_adjoint(problem.dirichlet(), load);
  dir.v = -1.0 * dir.p;
  if (fix_geometry) {
    dir.r = ScalarField::zero(problem.space_ptr());
  } else if (variant == DescentVariant::kI) {
    dir.r = ScalarField(problem.space_ptr(), -dir.p.coefficients().cwiseProduct(state.u.coefficients()));
  } else {
    const ScalarField d = solve_control_smoothing(problem.natural(), state.g, state.u, dir.p);
    dir.r = -1.0 * d;
  }
  const ScalarField q = solve_linearized(problem.dirichlet(), state.g, state.u,
                                         LevelSet::from_field(dir.r, false), dir.v);
  dir.predicted = load.dot(q.coefficients());
  return dir;
}

std::optional<int> select_step(const std::vector<Candidate>& candidates, double current) {
  std::optional<int> best_index;
  double best = current;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Candidate& c = candidates[i];
    if (c.ok && c.cost.total < best) {
      best = c.cost.total;
      best_index = static_cast<int>(i);
    }
  }
  return best_index;
}

LineSearchResult line_search(const ShapeProblem& problem, const Evaluation& state,
                             const DescentDirection& dir, const OptimizerSettings& settings) {
  const int n = settings.max_pow;
  std::vector<std::optional<Evaluation>> evals(static_cast<std::size_t>(n));
  LineSearchResult out;
  out.candidates.resize(static_cast<std::size_t>(n));
  const Vector& G = state.g.field()->coefficients();

  auto run = [&](int i) {
    Candidate& c = out.candidates[static_cast<std::size_t>(i)];
    c.index = i;
    c.lambda = std::pow(settings.rho, i);
    try {
      const ScalarField g = problem.project(ScalarField(problem.space_ptr(), G + c.lambda * dir.r.coefficients()));
      const ScalarField u(problem.space_ptr(), state.u.coefficients() + c.lambda * dir.v.coefficients());
      Evaluation e = evaluate(problem, g, u, settings.tracer);
      c.ok = true;
      c.cost = e.cost;
      c.components = static_cast<int>(e.components.size());
      evals[static_cast<std::size_t>(i)] = std::move(e);
    } catch (const Error& e) {
      c.ok = false;
      c.error = e.code() + ": " + e.what();
    }
  };

  const int threads = std::clamp(settings.threads, 1, n);
  if (threads == 1) {
    for (int i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) run(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  out.evaluation_of.assign(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    auto& e = evals[static_cast<std::size_t>(i)];
    if (!e) continue;
    out.evaluation_of[static_cast<std::size_t>(i)] = static_cast<int>(out.evaluations.size());
    out.evaluations.push_back(std::move(*e));
  }
  out.accepted = select_step(out.candidates, state.cost.total);
  return out;
}

OptimizationResult optimize(const ShapeProblem& problem, const ScalarField& g0, const ScalarField& u0,
                            const OptimizerSettings& settings) {
  OptimizationResult res;
  Evaluation state = evaluate(problem, problem.project(g0), u0, settings.tracer);
  res.component_counts.push_back(static_cast<int>(state.components.size()));
  res.log.push_back({0, 0, state.cost, 0.0, true, true, static_cast<int>(state.components.size()), {}});
  res.configurations.push_back({"k0", 0, 0, 0.0, true, state});
  res.iterates.push_back(state);

  for (int k = 0;; ++k) {
    if (k >= settings.max_iter) {
      res.stop_reason = "max_iter";
      break;
    }
    const DescentDirection dir = descent_direction(problem, state, settings.variant, settings.fix_geometry);
    res.predicted.push_back(dir.predicted);
    if (dir.predicted == 0.0) {
      res.stop_reason = "stationary";
      break;
    }
    LineSearchResult ls = line_search(problem, state, dir, settings);
    for (const Candidate& c : ls.candidates) {
      const bool acc = ls.accepted && *ls.accepted == c.index;
      res.log.push_back({k + 1, c.index + 1, c.cost, c.lambda, acc, c.ok, c.components, c.error});
      if (c.ok) res.component_counts.push_back(c.components);
    }
    if (!ls.accepted) {
      res.stop_reason = "no_descent";
      break;
    }
    // Improving but rejected candidates, in decreasing cost, then the
    // accepted one; at most settings.max_intermediate of the former.
    std::vector<int> improving;
    for (const Candidate& c : ls.candidates) {
      if (c.ok && c.cost.total < state.cost.total && c.index != *ls.accepted) improving.push_back(c.index);
    }
    std::stable_sort(improving.begin(), improving.end(), [&](int a, int b) {
      return ls.candidates[static_cast<std::size_t>(a)].cost.total > ls.candidates[static_cast<std::size_t>(b)].cost.total;
    });
    std::vector<int> kept;
    const int n_keep = std::min<int>(settings.max_intermediate, static_cast<int>(improving.size()));
    for (int j = 0; j < n_keep; ++j) {
      kept.push_back(improving[static_cast<std::size_t>(j * static_cast<int>(improving.size()) / n_keep)]);
    }
    kept.push_back(*ls.accepted);
    for (int idx : kept) {
      const Candidate& c = ls.candidates[static_cast<std::size_t>(idx)];
      const bool acc = idx == *ls.accepted;
      const auto& e = ls.evaluations[static_cast<std::size_t>(ls.evaluation_of[static_cast<std::size_t>(idx)])];
      const std::string label = acc ? "k" + std::to_string(k + 1)
                                    : "k" + std::to_string(k + 1) + "_s" + std::to_string(c.index + 1);
      res.configurations.push_back({label, k + 1, c.index + 1, c.lambda, acc, e});
    }
    const double previous = state.cost.total;
    state = ls.evaluations[static_cast<std::size_t>(ls.evaluation_of[static_cast<std::size_t>(*ls.accepted)])];
    res.iterates.push_back(state);
    if (std::abs(state.cost.total - previous) < settings.tol) {
      res.stop_reason = "tolerance";
      break;
    }
  }
  return res;
}

}  // namespace hamshape
