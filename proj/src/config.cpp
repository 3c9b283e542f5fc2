#include "hamshape/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hamshape/error.hpp"
#include "hamshape/expression.hpp"

namespace hamshape {
namespace {

constexpr const char* kExample1 = R"(
[mesh]
xmin = -3
xmax = 3
ymin = -3
ymax = 3
n = 96
degree = 2

[problem]
g0 = max(x1^2 + x2^2 - 2.5^2, -(x1+1)^2 - (x2+1)^2 + 0.5^2)
u0 = 0
f = -4 + x1^2 + x2^2 - 1
delta = 2
y_d = x1^2 + x2^2 - 1
distributed = false
boundary = true
epsilon = 0.5

[region]
type = none

[optimizer]
tol = 1e-6
rho = 0.8
max_pow = 30
max_iter = 50
variant = ii
)";

constexpr const char* kExample2 = R"(
[mesh]
xmin = -3
xmax = 3
ymin = -3
ymax = 3
n = 96
degree = 2

[problem]
g0 = max((x1+0.8)^2 + (x2+0.8)^2 - 1.8^2, -(x1+0.8)^2 - (x2+0.8)^2 + 0.6^2)
u0 = 1
f = -4 + x1^2 + x2^2 - 1
delta = 2
y_d = x1^2 + x2^2 - 1
distributed = true
boundary = false
epsilon = 0.9

[region]
type = disk
cx = 0
cy = 0
radius = 0.5
g_E = x1^2 + x2^2 - 0.5^2

[optimizer]
tol = 1e-6
rho = 0.8
max_pow = 30
max_iter = 50
variant = ii
)";

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw config_error(key + ": expected a number, got '" + v + "'");
  return d;
}

long to_long(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != static_cast<double>(static_cast<long>(d))) throw config_error(key + ": expected an integer");
  return static_cast<long>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw config_error(key + ": expected true or false, got '" + v + "'");
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

std::string preset_ini(const std::string& name) {
  if (name == "example1") return kExample1;
  if (name == "example2") return kExample2;
  throw config_error("unknown preset '" + name + "'");
}

RunConfig apply_ini(RunConfig c, const std::string& ini) {
  boost::property_tree::ptree tree;
  std::istringstream in(ini);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"mesh.xmin", [&](auto& k, auto& v) { c.bounds.xmin = to_double(k, v); }},
      {"mesh.xmax", [&](auto& k, auto& v) { c.bounds.xmax = to_double(k, v); }},
      {"mesh.ymin", [&](auto& k, auto& v) { c.bounds.ymin = to_double(k, v); }},
      {"mesh.ymax", [&](auto& k, auto& v) { c.bounds.ymax = to_double(k, v); }},
      {"mesh.n", [&](auto& k, auto& v) { c.n_per_side = static_cast<int>(to_long(k, v)); }},
      {"mesh.degree", [&](auto& k, auto& v) { c.degree = static_cast<int>(to_long(k, v)); }},
      {"mesh.pattern",
       [&](auto& k, auto& v) {
         if (v == "diagonal") c.pattern = MeshPattern::kDiagonal;
         else if (v == "crossed") c.pattern = MeshPattern::kCrossed;
         else throw config_error(k + ": expected diagonal or crossed");
       }},
      {"problem.g0", [&](auto&, auto& v) { c.g0 = v; }},
      {"problem.u0", [&](auto&, auto& v) { c.u0 = v; }},
      {"problem.f", [&](auto&, auto& v) { c.f = v; }},
      {"problem.delta", [&](auto&, auto& v) { c.delta = v; }},
      {"problem.y_d", [&](auto&, auto& v) { c.y_d = v; }},
      {"problem.distributed", [&](auto& k, auto& v) { c.distributed = to_bool(k, v); }},
      {"problem.boundary", [&](auto& k, auto& v) { c.boundary = to_bool(k, v); }},
      {"problem.epsilon", [&](auto& k, auto& v) { c.epsilon = to_double(k, v); }},
      {"region.type",
       [&](auto& k, auto& v) {
         if (v == "none") c.has_region = false;
         else if (v == "disk") c.has_region = true;
         else throw config_error(k + ": expected none or disk");
       }},
      {"region.cx", [&](auto& k, auto& v) { c.region_center.x() = to_double(k, v); }},
      {"region.cy", [&](auto& k, auto& v) { c.region_center.y() = to_double(k, v); }},
      {"region.radius", [&](auto& k, auto& v) { c.region_radius = to_double(k, v); }},
      {"region.g_E", [&](auto&, auto& v) { c.g_region = v; }},
      {"optimizer.tol", [&](auto& k, auto& v) { c.tol = to_double(k, v); }},
      {"optimizer.rho", [&](auto& k, auto& v) { c.rho = to_double(k, v); }},
      {"optimizer.max_pow", [&](auto& k, auto& v) { c.max_pow = static_cast<int>(to_long(k, v)); }},
      {"optimizer.max_iter", [&](auto& k, auto& v) { c.max_iter = static_cast<int>(to_long(k, v)); }},
      {"optimizer.variant",
       [&](auto& k, auto& v) {
         if (v == "i") c.variant = DescentVariant::kI;
         else if (v == "ii") c.variant = DescentVariant::kII;
         else throw config_error(k + ": expected i or ii");
       }},
      {"optimizer.fix_geometry", [&](auto& k, auto& v) { c.fix_geometry = to_bool(k, v); }},
      {"tracer.step_factor", [&](auto& k, auto& v) { c.step_factor = to_double(k, v); }},
      {"tracer.min_gradient", [&](auto& k, auto& v) { c.min_gradient = to_double(k, v); }},
      {"tracer.capture_factor", [&](auto& k, auto& v) { c.capture_factor = to_double(k, v); }},
      {"tracer.capture_floor", [&](auto& k, auto& v) { c.capture_floor = to_double(k, v); }},
      {"tracer.max_steps", [&](auto& k, auto& v) { c.max_steps = to_long(k, v); }},
      {"run.out", [&](auto&, auto& v) { c.out = v; }},
      {"run.seed", [&](auto& k, auto& v) { c.seed = static_cast<unsigned>(to_long(k, v)); }},
      {"run.threads", [&](auto& k, auto& v) { c.threads = static_cast<int>(to_long(k, v)); }},
  };
  for (const auto& [section, keys] : tree) {
    if (keys.empty() && !keys.data().empty()) {
      throw config_error("config: key '" + section + "' outside of a section");
    }
    for (const auto& [key, value] : keys) {
      const std::string full = section + "." + key;
      const auto it = setters.find(full);
      if (it == setters.end()) throw config_error("config: unknown key '" + full + "'");
      it->second(full, value.data());
    }
  }
  return c;
}

RunConfig load_config(const std::optional<std::string>& preset,
                      const std::optional<std::filesystem::path>& path) {
  RunConfig c;
  if (preset) c = apply_ini(c, preset_ini(*preset));
  if (path) {
    std::ifstream in(*path);
    if (!in) throw config_error("cannot read config " + path->string());
    std::stringstream text;
    text << in.rdbuf();
    c = apply_ini(c, text.str());
  }
  return c;
}

void RunConfig::validate() const {
  if (!(epsilon > 0.0)) throw config_error("epsilon must be > 0");
  if (!(rho > 0.0 && rho < 1.0)) throw config_error("rho must lie in (0, 1)");
  if (!(tol > 0.0)) throw config_error("tol must be > 0");
  if (n_per_side < 2) throw config_error("mesh.n must be >= 2");
  if (degree != 1 && degree != 2) throw config_error("mesh.degree must be 1 or 2");
  if (!(bounds.width() > 0.0 && bounds.height() > 0.0)) throw config_error("mesh bounds are degenerate");
  if (max_pow < 1) throw config_error("max_pow must be >= 1");
  if (max_iter < 0) throw config_error("max_iter must be >= 0");
  if (!(step_factor > 0.0)) throw config_error("step_factor must be > 0");
  if (!(min_gradient > 0.0)) throw config_error("min_gradient must be > 0");
  if (!(capture_floor >= 0.0)) throw config_error("capture_floor must be >= 0");
  if (has_region) {
    if (!(region_radius > 0.0)) throw config_error("region.radius must be > 0");
    if (g_region.empty()) throw config_error("region.g_E is required with a disk region");
    parse_expression(g_region);
  }
  for (const std::string* e : {&g0, &u0, &f, &delta, &y_d}) parse_expression(*e);
}

std::string RunConfig::to_ini() const {
  std::ostringstream s;
  s << "[mesh]\nxmin = " << fmt(bounds.xmin) << "\nxmax = " << fmt(bounds.xmax) << "\nymin = " << fmt(bounds.ymin)
    << "\nymax = " << fmt(bounds.ymax) << "\nn = " << n_per_side << "\ndegree = " << degree
    << "\npattern = " << (pattern == MeshPattern::kDiagonal ? "diagonal" : "crossed") << "\n\n";
  s << "[problem]\ng0 = " << g0 << "\nu0 = " << u0 << "\nf = " << f << "\ndelta = " << delta << "\ny_d = " << y_d
    << "\ndistributed = " << (distributed ? "true" : "false") << "\nboundary = " << (boundary ? "true" : "false")
    << "\nepsilon = " << fmt(epsilon) << "\n\n";
  s << "[region]\ntype = " << (has_region ? "disk" : "none") << "\n";
  if (has_region) {
    s << "cx = " << fmt(region_center.x()) << "\ncy = " << fmt(region_center.y()) << "\nradius = " << fmt(region_radius)
      << "\ng_E = " << g_region << "\n";
  }
  s << "\n[optimizer]\ntol = " << fmt(tol) << "\nrho = " << fmt(rho) << "\nmax_pow = " << max_pow
    << "\nmax_iter = " << max_iter << "\nvariant = " << (variant == DescentVariant::kI ? "i" : "ii")
    << "\nfix_geometry = " << (fix_geometry ? "true" : "false") << "\n\n";
  s << "[tracer]\nstep_factor = " << fmt(step_factor) << "\nmin_gradient = " << fmt(min_gradient)
    << "\ncapture_factor = " << fmt(capture_factor) << "\ncapture_floor = " << fmt(capture_floor) << "\nmax_steps = " << max_steps << "\n\n";
  s << "[run]\nout = " << out.string() << "\nseed = " << seed << "\nthreads = " << threads << "\n";
  return s.str();
}

MeshPtr RunConfig::build_mesh() const { return build_rectangle_mesh(bounds, n_per_side, pattern); }

ObservationRegion RunConfig::region() const {
  if (!has_region) return {};
  return ObservationRegion::disk(region_center, region_radius);
}

CostProblem RunConfig::cost_problem() const {
  CostProblem cp;
  cp.region = region();
  cp.functions = CostFunctions::tracking(parse_expression(y_d), distributed, boundary);
  cp.delta = parse_expression(delta);
  cp.epsilon = epsilon;
  cp.min_gradient = min_gradient;
  return cp;
}

OptimizerSettings RunConfig::settings(const Mesh& mesh) const {
  OptimizerSettings s;
  s.rho = rho;
  s.max_pow = max_pow;
  s.tol = tol;
  s.max_iter = max_iter;
  s.variant = variant;
  s.fix_geometry = fix_geometry;
  s.threads = threads > 0 ? threads : default_threads();
  s.tracer.h = mesh.h();
  s.tracer.step_factor = step_factor;
  s.tracer.min_gradient = min_gradient;
  s.tracer.capture_factor = capture_factor;
  s.tracer.capture_floor = capture_floor * mesh.h();
  s.tracer.max_steps = max_steps;
  return s;
}

int default_threads() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("HAMSHAPE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return n;
}

}  // namespace hamshape
