#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "hamshape/geometry.hpp"
#include "hamshape/optimizer.hpp"

namespace hamshape {

/// One run, fully described. Read from INI text:
///
///   [mesh]      xmin xmax ymin ymax n degree pattern
///   [problem]   g0 u0 f delta y_d distributed boundary epsilon
///   [region]    type (none|disk) cx cy radius g_E
///   [optimizer] tol rho max_pow max_iter variant (i|ii) fix_geometry
///   [tracer]    step_factor min_gradient capture_factor capture_floor max_steps
///   [run]       out seed threads
struct RunConfig {
  Box bounds{-3.0, 3.0, -3.0, 3.0};
  int n_per_side = 96;
  int degree = 2;
  MeshPattern pattern = MeshPattern::kDiagonal;

  std::string g0 = "x1^2+x2^2-1";
  std::string u0 = "0";
  std::string f = "0";
  std::string delta = "0";
  std::string y_d = "0";
  bool distributed = false;
  bool boundary = false;
  double epsilon = 1.0;

  bool has_region = false;
  Vec2 region_center = Vec2::Zero();
  double region_radius = 0.0;
  std::string g_region;

  double tol = 1e-6;
  double rho = 0.8;
  int max_pow = 30;
  int max_iter = 50;
  DescentVariant variant = DescentVariant::kII;
  bool fix_geometry = false;

  double step_factor = 0.125;
  double min_gradient = 1e-3;
  double capture_factor = 0.1;
  double capture_floor = 0.1;  // units of h
  long max_steps = 1000000;

  std::filesystem::path out = "out";
  unsigned seed = 0;
  int threads = 0;  // 0: default_threads()

  // Throws a config Error on out-of-range values or unparsable expressions.
  void validate() const;
  std::string to_ini() const;

  MeshPtr build_mesh() const;
  ObservationRegion region() const;
  CostProblem cost_problem() const;
  OptimizerSettings settings(const Mesh& mesh) const;
};

// Embedded INI text of a named preset ("example1", "example2").
std::string preset_ini(const std::string& name);

// Values from `ini` override `base`; unknown sections or keys are rejected.
RunConfig apply_ini(RunConfig base, const std::string& ini);
RunConfig load_config(const std::optional<std::string>& preset,
                      const std::optional<std::filesystem::path>& path);

// Hardware concurrency, capped by HAMSHAPE_THREADS when set.
int default_threads();

}  // namespace hamshape
