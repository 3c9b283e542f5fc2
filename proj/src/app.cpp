#include "hamshape/app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "hamshape/expression.hpp"

namespace hamshape {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::shared_ptr<const ShapeProblem> make_problem(const RunConfig& c, const SpacePtr& space) {
  std::optional<LevelSet> g_region;
  if (c.has_region) g_region = LevelSet::analytic(parse_expression(c.g_region));
  return std::make_shared<const ShapeProblem>(space, parse_expression(c.f), c.cost_problem(), g_region);
}

ValidationRow validate_one(const RunConfig& config, const Mesh& mesh, const MeshPtr& mesh_ptr,
                           const CostProblem& cost, const ScalarFunction& f, const Configuration& cfg) {
  ValidationRow row;
  row.label = cfg.label;
  row.k = cfg.k;
  row.sub_step = cfg.sub_step;
  row.accepted = cfg.accepted;
  const LevelSet& g = cfg.state.g;
  const TriangleMask mask = cost.region.empty() ? negative_triangles(g, mesh) : classify_domain(g, mesh, cost.region);
  row.area = mask_area(mesh, mask);
  const NeumannSolution sol =
      solve_neumann_validation(mesh_ptr, config.degree, mask, f, cost.delta, cfg.state.components);
  const CostFunctions& cf = cost.functions;
  if (cf.has_boundary()) {
    row.t2 = boundary_integral(cfg.state.components,
                               [&](const TraceSample& s) { return cf.j(s.z, sol.value(mesh, s.z)); });
  }
  if (cf.has_distributed()) {
    const auto& pts = cost.region.points();
    const auto& wts = cost.region.weights();
    for (std::size_t i = 0; i < pts.size(); ++i) row.t1 += wts[i] * cf.J(pts[i], sol.value(mesh, pts[i]));
  }
  return row;
}

// r - sum_c r(x_c) psi_c, with psi_c a narrow bump at x_c (or 1 for a single
// point), so that the result vanishes at every x_c.
ScalarFunction pinned(const ScalarFunction& r, const std::vector<Vec2>& points) {
  if (points.size() == 1) return r + ScalarFunction::constant(-r.value(points[0]));
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < points.size(); ++a) {
    for (std::size_t b = a + 1; b < points.size(); ++b) sep = std::min(sep, (points[a] - points[b]).norm());
  }
  const double sigma = sep / 9.0;
  std::vector<double> offsets;
  for (const Vec2& p : points) offsets.push_back(r.value(p));
  return ScalarFunction(
      [r, points, offsets, sigma](const Vec2& x) {
        Jet out = r(x);
        for (std::size_t c = 0; c < points.size(); ++c) {
          const Jet dx = Jet::x1(x) - Jet::constant(points[c].x());
          const Jet dy = Jet::x2(x) - Jet::constant(points[c].y());
          const Jet bump = exp(-(0.5 / (sigma * sigma)) * (dx * dx + dy * dy));
          out = out - offsets[c] * bump;
        }
        return out;
      },
      "pinned");
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace

Setup make_setup(const RunConfig& config) {
  config.validate();
  MeshPtr mesh = config.build_mesh();
  auto space = std::make_shared<const FiniteElementSpace>(mesh, config.degree);
  Setup s{mesh,
          space,
          make_problem(config, space),
          ScalarField::interpolate(space, parse_expression(config.g0)),
          ScalarField::interpolate(space, parse_expression(config.u0)),
          config.settings(*mesh)};
  return s;
}

void write_iterations_csv(const OptimizationResult& result, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw numerical_error("io", "cannot write " + path.string());
  out << "k,sub_step,t1,t2,t3,J,lambda,accepted\n";
  for (const LogRow& r : result.log) {
    if (!r.ok) continue;
    out << r.k << ',' << r.sub_step << ',' << g6(r.cost.t1) << ',' << g6(r.cost.t2) << ',' << g6(r.cost.t3) << ','
        << g6(r.cost.total) << ',' << g6(r.lambda) << ',' << (r.accepted ? 1 : 0) << '\n';
  }
}

void write_boundary_csv(const TracedComponent& comp, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw numerical_error("io", "cannot write " + path.string());
  out << "t,z1,z2,dz1,dz2\n";
  for (const TraceSample& s : comp.samples) {
    out << g17(s.t) << ',' << g17(s.z.x()) << ',' << g17(s.z.y()) << ',' << g17(s.dz.x()) << ',' << g17(s.dz.y())
        << '\n';
  }
}

void write_svg(const Box& frame, const std::vector<TracedComponent>& components, const ObservationRegion& region,
               const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw numerical_error("io", "cannot write " + path.string());
  const double stroke = 0.004 * std::max(frame.width(), frame.height());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << g6(frame.xmin) << ' ' << g6(-frame.ymax) << ' '
      << g6(frame.width()) << ' ' << g6(frame.height()) << "\" width=\"600\" height=\""
      << g6(600.0 * frame.height() / frame.width()) << "\">\n";
  out << "<g transform=\"scale(1,-1)\" fill=\"none\" stroke-width=\"" << g6(stroke) << "\">\n";
  out << "<rect class=\"frame\" x=\"" << g6(frame.xmin) << "\" y=\"" << g6(frame.ymin) << "\" width=\""
      << g6(frame.width()) << "\" height=\"" << g6(frame.height()) << "\" stroke=\"black\"/>\n";
  if (!region.empty()) {
    out << "<circle class=\"region\" cx=\"" << g6(region.center().x()) << "\" cy=\"" << g6(region.center().y())
        << "\" r=\"" << g6(region.radius()) << "\" stroke=\"red\"/>\n";
  }
  for (const TracedComponent& c : components) {
    out << "<polyline class=\"boundary\" stroke=\"blue\" points=\"";
    for (std::size_t i = 0; i < c.samples.size(); ++i) {
      if (i) out << ' ';
      out << g6(c.samples[i].z.x()) << ',' << g6(c.samples[i].z.y());
    }
    out << "\"/>\n";
  }
  out << "</g>\n</svg>\n";
}

RunReport run(const RunConfig& config, std::ostream& log) {
  Setup s = make_setup(config);
  fs::create_directories(config.out);
  {
    std::ofstream ini(config.out / "run_config.ini");
    ini << config.to_ini();
  }

  RunReport report;
  report.result = optimize(*s.problem, s.g0, s.u0, s.settings);
  const OptimizationResult& res = report.result;
  for (const LogRow& r : res.log) {
    if (r.ok) continue;
    report.warnings.push_back("k=" + std::to_string(r.k) + " lambda=" + g6(r.lambda) + " skipped: " + r.error);
    log << "warning: " << report.warnings.back() << '\n';
  }

  write_iterations_csv(res, config.out / "iterations.csv");
  write_mesh_csv(*s.mesh, config.out / "mesh");
  const fs::path fields = config.out / "fields";
  fs::create_directories(fields);

  json configurations = json::array();
  for (const Configuration& c : res.configurations) {
    write_field_csv(*c.state.g.field(), fields / ("g_" + c.label + ".csv"));
    if (c.accepted) {
      write_field_csv(c.state.u, fields / ("u_" + c.label + ".csv"));
      write_field_csv(c.state.y, fields / ("y_" + c.label + ".csv"));
    }
    configurations.push_back({{"label", c.label},
                              {"k", c.k},
                              {"sub_step", c.sub_step},
                              {"lambda", c.lambda},
                              {"accepted", c.accepted},
                              {"J", c.state.cost.total}});
  }

  json per_iteration = json::array();
  for (std::size_t k = 0; k < res.iterates.size(); ++k) {
    const Evaluation& e = res.iterates[k];
    for (std::size_t c = 0; c < e.components.size(); ++c) {
      write_boundary_csv(e.components[c],
                         config.out / ("boundary_" + std::to_string(k) + "_" + std::to_string(c) + ".csv"));
    }
    write_svg(s.mesh->bounds(), e.components, s.problem->cost().region,
              config.out / ("iteration_" + std::to_string(k) + ".svg"));
    double lambda = 0.0;
    for (const Configuration& c : res.configurations) {
      if (c.accepted && c.k == static_cast<int>(k)) lambda = c.lambda;
    }
    json row = {{"k", k},
                {"t1", e.cost.t1},
                {"t2", e.cost.t2},
                {"t3", e.cost.t3},
                {"J", e.cost.total},
                {"lambda", lambda},
                {"components", e.components.size()}};
    if (k < res.predicted.size()) row["predicted"] = res.predicted[k];
    per_iteration.push_back(row);
    log << "k=" << k << " J=" << g6(e.cost.total) << " t1=" << g6(e.cost.t1) << " t2=" << g6(e.cost.t2)
        << " t3=" << g6(e.cost.t3) << " components=" << e.components.size() << '\n';
  }

  json summary = {{"iterations", res.iterates.size() - 1},
                  {"final_cost", res.iterates.back().cost.total},
                  {"stop_reason", res.stop_reason},
                  {"epsilon", config.epsilon},
                  {"per_iteration", per_iteration},
                  {"configurations", configurations},
                  {"component_counts", res.component_counts},
                  {"warnings", report.warnings}};
  std::ofstream(config.out / "summary.json") << summary.dump(2) << '\n';
  log << "stop: " << res.stop_reason << '\n';
  return report;
}

std::vector<ComponentReport> trace(const RunConfig& config, std::ostream& log) {
  config.validate();
  const MeshPtr mesh = config.build_mesh();
  const LevelSet g = LevelSet::analytic(parse_expression(config.g0));
  const TracerOptions opts = config.settings(*mesh).tracer;
  const std::vector<TracedComponent> comps = detect_components(g, *mesh, opts);
  fs::create_directories(config.out);
  std::vector<ComponentReport> out;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const TracedComponent& tc = comps[c];
    ComponentReport r;
    r.period = tc.period;
    r.length = tc.length;
    r.closure_gap = tc.closure_gap;
    r.samples = static_cast<int>(tc.samples.size());
    r.min_gradient = std::numeric_limits<double>::infinity();
    for (const TraceSample& s : tc.samples) r.min_gradient = std::min(r.min_gradient, s.dz.norm());
    out.push_back(r);
    write_boundary_csv(tc, config.out / ("boundary_0_" + std::to_string(c) + ".csv"));
    char line[200];
    std::snprintf(line, sizeof line, "component %zu: T=%.12g L=%.12g min|grad g|=%.6g gap=%.3g samples=%d\n", c,
                  r.period, r.length, r.min_gradient, r.closure_gap, r.samples);
    log << line;
  }
  return out;
}

ValidationReport validate_configurations(const RunConfig& config, const SpacePtr& space,
                                         const std::vector<Configuration>& configurations) {
  ValidationReport report;
  const CostProblem cost = config.cost_problem();
  const ScalarFunction f = parse_expression(config.f);
  report.uses_t2 = cost.functions.has_boundary();
  double best = std::numeric_limits<double>::infinity();
  for (const Configuration& c : configurations) {
    report.rows.push_back(validate_one(config, space->mesh(), space->mesh_ptr(), cost, f, c));
    const double v = report.uses_t2 ? report.rows.back().t2 : report.rows.back().t1;
    if (v < best) {
      best = v;
      report.argmin = static_cast<int>(report.rows.size()) - 1;
    }
  }
  return report;
}

ValidationReport validate(const fs::path& run_dir, std::ostream& log) {
  const fs::path summary_path = run_dir / "summary.json";
  if (!fs::is_directory(run_dir) || !fs::exists(summary_path) || !fs::exists(run_dir / "run_config.ini")) {
    throw config_error("missing run directory: " + run_dir.string() + " has no completed run");
  }
  const RunConfig config = load_config(std::nullopt, run_dir / "run_config.ini");
  config.validate();
  json summary;
  try {
    std::ifstream(summary_path) >> summary;
  } catch (const json::exception& e) {
    throw config_error("cannot parse " + summary_path.string() + ": " + e.what());
  }
  const MeshPtr mesh = config.build_mesh();
  auto space = std::make_shared<const FiniteElementSpace>(mesh, config.degree);
  const TracerOptions opts = config.settings(*mesh).tracer;

  std::vector<Configuration> configurations;
  for (const json& j : summary.at("configurations")) {
    Configuration c;
    c.label = j.at("label").get<std::string>();
    c.k = j.at("k").get<int>();
    c.sub_step = j.at("sub_step").get<int>();
    c.lambda = j.at("lambda").get<double>();
    c.accepted = j.at("accepted").get<bool>();
    c.state.g = LevelSet::from_field(read_field_csv(space, run_dir / "fields" / ("g_" + c.label + ".csv")));
    c.state.components = detect_components(c.state.g, *mesh, opts);
    configurations.push_back(std::move(c));
  }
  ValidationReport report = validate_configurations(config, space, configurations);

  std::ofstream csv(run_dir / "validation.csv");
  csv << "label,k,sub_step,accepted,area,t1,t2\n";
  log << (report.uses_t2 ? "t2" : "t1") << " of the Neumann solution per configuration\n";
  for (const ValidationRow& r : report.rows) {
    csv << r.label << ',' << r.k << ',' << r.sub_step << ',' << (r.accepted ? 1 : 0) << ',' << g6(r.area) << ','
        << g6(r.t1) << ',' << g6(r.t2) << '\n';
    log << "  " << r.label << (r.accepted ? "  " : "* ") << g6(report.uses_t2 ? r.t2 : r.t1) << '\n';
  }
  if (report.argmin >= 0) {
    log << "best: " << report.rows[static_cast<std::size_t>(report.argmin)].label << " (index " << report.argmin
        << " of " << report.rows.size() << ")\n";
  }
  return report;
}

std::vector<GradCheckCase> default_grad_cases() {
  return {
      {"x1^2 + x2^2 - 1", "1", "0.3*x1*x2 + 0.2*x2", "0.5*x1"},
      {"(x1/1.5)^2 + (x2/0.8)^2 - 1", "1 + 0.2*x1", "0.2*x1^2 - 0.1*x2", "cos(x1)"},
      {"(x1-0.3)^2 + (x2+0.2)^2 - 1.44", "x2", "0.3*sin(x1)", "1"},
      {"max(x1^2 + x2^2 - 4, 0.25 - x1^2 - x2^2)", "1", "0.1*x1*x2 + 0.05", "x1"},
      {"max(x1^2 + x2^2 - 2.5^2, -(x1+1)^2 - (x2+1)^2 + 0.5^2)", "0", "0.1*(x1^2 - x2^2)", "1"},
  };
}

GradCheckResult gradient_check(const RunConfig& config, const GradCheckCase& gc, double step) {
  config.validate();
  const MeshPtr mesh = config.build_mesh();
  auto space = std::make_shared<const FiniteElementSpace>(mesh, config.degree);
  const CostProblem cost = config.cost_problem();
  const ScalarFunction f = parse_expression(config.f);
  const EllipticOperator op(space, BoundaryCondition::kDirichlet);
  const TracerOptions opts = config.settings(*mesh).tracer;

  const LevelSet g = LevelSet::analytic(parse_expression(gc.g));
  const std::vector<TracedComponent> comps = detect_components(g, *mesh, opts);
  std::vector<Vec2> starts;
  for (const auto& c : comps) starts.push_back(c.start);
  const LevelSet r = LevelSet::analytic(pinned(parse_expression(gc.r), starts));
  const ScalarField u = ScalarField::interpolate(space, parse_expression(gc.u));
  const ScalarField v = ScalarField::interpolate(space, parse_expression(gc.v));

  GradCheckResult out;
  const ScalarField y = solve_state(op, g, u, f);
  const ScalarField q = solve_linearized(op, g, u, r, v);
  std::vector<VariationTrajectory> variations;
  for (const auto& c : comps) {
    variations.push_back(solve_variation(g, r, c));
    out.theta.push_back(period_derivative(c, variations.back(), config.min_gradient));
  }
  DerivativeInputs in;
  in.y = &y;
  in.q = &q;
  in.g = &g;
  in.r = &r;
  in.components = &comps;
  in.variations = &variations;
  in.thetas = &out.theta;
  out.derivative = directional_derivative(in, cost);

  auto cost_at = [&](double lambda, std::vector<double>& periods) {
    const LevelSet gl = g.plus(lambda, r, space);
    const ScalarField ul(space, u.coefficients() + lambda * v.coefficients());
    std::vector<TracedComponent> cl;
    for (const auto& c : comps) {
      TracerOptions o = opts;
      o.time_step = c.time_step;
      cl.push_back(trace_component(gl, c.start, o));
      periods.push_back(cl.back().period);
    }
    return evaluate_cost(solve_state(op, gl, ul, f), cl, cost).total;
  };
  std::vector<double> tp, tm;
  const double jp = cost_at(step, tp);
  const double jm = cost_at(-step, tm);
  out.finite_difference = (jp - jm) / (2.0 * step);
  const double scale = std::max({std::abs(out.finite_difference), std::abs(out.derivative), 1e-300});
  out.relative_error = std::abs(out.derivative - out.finite_difference) / scale;
  if (out.derivative == 0.0 && out.finite_difference == 0.0) out.relative_error = 0.0;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    out.theta_fd.push_back((tp[c] - tm[c]) / (2.0 * step));
    out.theta_error = std::max(out.theta_error, std::abs(out.theta[c] - out.theta_fd[c]) /
                                                    std::max(1.0, std::abs(out.theta[c])));
  }
  return out;
}

int selftest(std::ostream& log) {
  int failures = 0;
  auto check = [&](bool ok, const std::string& name) {
    log << (ok ? "PASS " : "FAIL ") << name << '\n';
    if (!ok) ++failures;
  };
  auto guarded = [&](const std::string& name, const std::function<bool()>& body) {
    try {
      check(body(), name);
    } catch (const std::exception& e) {
      check(false, name + " (" + e.what() + ")");
    }
  };

  const MeshPtr mesh = build_rectangle_mesh({-3, 3, -3, 3}, 48);
  TracerOptions opts;
  opts.h = mesh->h();
  const LevelSet circle = LevelSet::analytic(parse_expression("x1^2 + x2^2 - 1"));

  guarded("unit circle period", [&] {
    const auto comps = detect_components(circle, *mesh, opts);
    return comps.size() == 1 && near(comps[0].period, std::numbers::pi, 1e-8);
  });
  guarded("period derivative along g", [&] {
    const auto comp = trace_component(circle, {1.0, 0.0}, opts);
    const auto w = solve_variation(circle, circle, comp);
    return near(period_derivative(comp, w), -std::numbers::pi, 1e-4);
  });
  guarded("constant Neumann solution", [&] {
    const TriangleMask mask = classify_domain(circle, *mesh, Vec2(0.0, 0.0));
    const auto sol = solve_neumann_validation(mesh, 2, mask, ScalarFunction::constant(1.5),
                                              ScalarFunction::constant(0.0), {});
    return (sol.y.coefficients().array() - 1.5).abs().maxCoeff() < 1e-10;
  });
  guarded("epsilon = 0 rejected", [&] {
    RunConfig c;
    c.epsilon = 0.0;
    try {
      c.validate();
    } catch (const Error& e) {
      return e.kind() == ErrorKind::kConfig;
    }
    return false;
  });
  guarded("example 1 initial cost", [&] {
    RunConfig c = apply_ini(RunConfig{}, preset_ini("example1"));
    c.n_per_side = 48;
    const Setup s = make_setup(c);
    const Evaluation e = evaluate(*s.problem, s.g0, s.u0, s.settings.tracer);
    return e.components.size() == 2 && std::abs(e.cost.total - 291.89) < 0.1 * 291.89;
  });
  log << (failures == 0 ? "selftest ok\n" : "selftest failed\n");
  return failures;
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kConfig:
      return 2;
    case ErrorKind::kNumerical:
      return 3;
    case ErrorKind::kAdmissibility:
      return 4;
  }
  return 3;
}

std::string error_json(const Error& e) {
  const char* kind = e.kind() == ErrorKind::kConfig      ? "config"
                     : e.kind() == ErrorKind::kNumerical ? "numerical"
                                                         : "admissibility";
  return json{{"error", {{"kind", kind}, {"code", e.code()}, {"message", e.what()}}}}.dump();
}

}  // namespace hamshape
