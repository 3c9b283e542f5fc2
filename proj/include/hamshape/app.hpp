#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hamshape/config.hpp"
#include "hamshape/error.hpp"
#include "hamshape/optimizer.hpp"

namespace hamshape {

/// Mesh, space and problem data assembled from a RunConfig.
struct Setup {
  MeshPtr mesh;
  SpacePtr space;
  std::shared_ptr<const ShapeProblem> problem;
  ScalarField g0;
  ScalarField u0;
  OptimizerSettings settings;
};

Setup make_setup(const RunConfig& config);

struct RunReport {
  OptimizationResult result;
  std::vector<std::string> warnings;  // skipped line-search candidates
};

// Optimizes and writes every artifact into config.out.
RunReport run(const RunConfig& config, std::ostream& log);

void write_iterations_csv(const OptimizationResult& result, const std::filesystem::path& path);
void write_boundary_csv(const TracedComponent& comp, const std::filesystem::path& path);
void write_svg(const Box& frame, const std::vector<TracedComponent>& components,
               const ObservationRegion& region, const std::filesystem::path& path);

struct ComponentReport {
  double period = 0.0;
  double length = 0.0;
  double min_gradient = 0.0;
  double closure_gap = 0.0;
  int samples = 0;
};

// Traces {g0 = 0} with g0 evaluated analytically.
std::vector<ComponentReport> trace(const RunConfig& config, std::ostream& log);

struct ValidationRow {
  std::string label;
  int k = 0;
  int sub_step = 0;
  bool accepted = false;
  double area = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
};

struct ValidationReport {
  std::vector<ValidationRow> rows;
  bool uses_t2 = true;   // boundary tracking (t2) or distributed tracking (t1)
  int argmin = -1;       // row with the smallest reported value
};

// Neumann solve on the domain of each stored configuration of a run directory.
ValidationReport validate(const std::filesystem::path& run_dir, std::ostream& log);

// The same for configurations held in memory.
ValidationReport validate_configurations(const RunConfig& config, const SpacePtr& space,
                                         const std::vector<Configuration>& configurations);

struct GradCheckCase {
  std::string g;
  std::string u;
  std::string r;
  std::string v;
};

struct GradCheckResult {
  double derivative = 0.0;
  double finite_difference = 0.0;
  double relative_error = 0.0;
  std::vector<double> theta;
  std::vector<double> theta_fd;
  double theta_error = 0.0;  // max relative error over components
};

// Compares the directional derivative of the cost with a central difference
// of step `step`. Traces start at fixed points where r is made to vanish.
GradCheckResult gradient_check(const RunConfig& config, const GradCheckCase& c, double step = 1e-4);

// Default configurations used by the grad-check command.
std::vector<GradCheckCase> default_grad_cases();

// Short built-in consistency checks; returns the number of failures.
int selftest(std::ostream& log);

// Exit code for an Error: 2 config, 3 numerical, 4 admissibility.
int exit_code(const Error& e);
std::string error_json(const Error& e);

}  // namespace hamshape
