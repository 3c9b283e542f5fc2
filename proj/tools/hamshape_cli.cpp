#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "hamshape/app.hpp"

using namespace hamshape;

namespace {

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> preset;
  std::optional<std::string> out;
  std::optional<int> mesh_n;
  std::optional<double> epsilon;
  std::optional<std::string> variant;
  std::optional<int> max_iter;
  std::optional<unsigned> seed;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "INI file with run settings");
  cmd->add_option("--preset", o.preset, "embedded preset (example1, example2)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--mesh-n", o.mesh_n, "cells per side of D");
  cmd->add_option("--epsilon", o.epsilon, "penalty parameter");
  cmd->add_option("--variant", o.variant, "descent direction variant")->check(CLI::IsMember({"i", "ii"}));
  cmd->add_option("--max-iter", o.max_iter, "outer iteration cap");
  cmd->add_option("--seed", o.seed, "random seed");
}

RunConfig resolve(const Overrides& o) {
  std::optional<std::filesystem::path> path;
  if (o.config) path = *o.config;
  RunConfig c = load_config(o.preset, path);
  if (o.out) c.out = *o.out;
  if (o.mesh_n) c.n_per_side = *o.mesh_n;
  if (o.epsilon) c.epsilon = *o.epsilon;
  if (o.variant) c.variant = *o.variant == "i" ? DescentVariant::kI : DescentVariant::kII;
  if (o.max_iter) c.max_iter = *o.max_iter;
  if (o.seed) c.seed = *o.seed;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shape and topology optimization with Hamiltonian boundary tracing"};
  app.require_subcommand(1);

  Overrides run_o, trace_o, grad_o;
  std::string run_dir;
  auto* run_cmd = app.add_subcommand("run", "optimize and write artifacts");
  add_common(run_cmd, run_o);
  auto* trace_cmd = app.add_subcommand("trace", "trace the zero set of g0");
  add_common(trace_cmd, trace_o);
  auto* validate_cmd = app.add_subcommand("validate", "Neumann solves on the domains of a finished run");
  validate_cmd->add_option("run_dir", run_dir, "run directory")->required();
  auto* grad_cmd = app.add_subcommand("grad-check", "compare derivatives with finite differences");
  add_common(grad_cmd, grad_o);
  double step = 1e-4;
  grad_cmd->add_option("--step", step, "finite difference step");
  auto* self_cmd = app.add_subcommand("selftest", "quick built-in checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const RunConfig c = resolve(run_o);
      const RunReport r = run(c, std::cout);
      std::cout << "final J = " << r.result.iterates.back().cost.total << " after "
                << r.result.iterates.size() - 1 << " iterations, artifacts in " << c.out.string() << '\n';
    } else if (*trace_cmd) {
      trace(resolve(trace_o), std::cout);
    } else if (*validate_cmd) {
      validate(run_dir, std::cout);
    } else if (*grad_cmd) {
      if (!grad_o.config && !grad_o.preset) grad_o.preset = "example1";
      const RunConfig c = resolve(grad_o);
      bool ok = true;
      int i = 0;
      for (const GradCheckCase& gc : default_grad_cases()) {
        const GradCheckResult r = gradient_check(c, gc, step);
        std::printf("case %d: g = %s\n  dJ = %.10g  fd = %.10g  rel = %.3g\n", i++, gc.g.c_str(), r.derivative,
                    r.finite_difference, r.relative_error);
        for (std::size_t k = 0; k < r.theta.size(); ++k) {
          std::printf("  theta[%zu] = %.10g  fd = %.10g\n", k, r.theta[k], r.theta_fd[k]);
        }
        ok = ok && r.relative_error <= 1e-3 && r.theta_error <= 1e-3;
      }
      std::printf("%s\n", ok ? "all within 1e-3" : "some errors above 1e-3");
      return ok ? 0 : 3;
    } else if (*self_cmd) {
      return selftest(std::cout) == 0 ? 0 : 3;
    }
  } catch (const Error& e) {
    std::cerr << error_json(e) << '\n';
    return exit_code(e);
  }
  return 0;
}
