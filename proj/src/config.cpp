#include "mfg/config.hpp"

#include "mfg/catalog.hpp"
#include "mfg/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace mfg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool passthrough(const std::string& key) {
  return (key.rfind("model.", 0) == 0 && key != "model.name") || key.rfind("lyapunov.", 0) == 0;
}

const std::vector<std::string> kLyapunovKeys{"lyapunov.c_l", "lyapunov.c_f", "lyapunov.c_g", "lyapunov.c_h"};

}  // namespace

const std::map<std::string, std::string>& config_defaults() {
  static const std::map<std::string, std::string> d{
      {"grid.dim", "1"},
      {"grid.L", "2"},
      {"grid.n", "21"},
      {"time.T", "1"},
      {"time.K", "20"},
      {"model.name", "ex2.1"},
      {"controls.shape", "box"},
      {"controls.dim", "1"},
      {"controls.lo", "-1"},
      {"controls.hi", "1"},
      {"controls.radius", "1"},
      {"controls.points", "21"},
      {"controls.default", "auto"},
      {"initial.kind", "gaussian"},
      {"initial.mean", "0"},
      {"initial.variance", "0.2"},
      {"initial.file", ""},
      {"solver.scheme", "explicit"},
      {"solver.cfl_max", "0.9"},
      {"solver.renormalize", "false"},
      {"solver.wide_stencil", "true"},
      {"fpk.control", "default"},
      {"fpk.environment", "initial"},
      {"best_response.r", "0"},
      {"best_response.enforce_apriori", "true"},
      {"fixed_point.damping", "0.5"},
      {"fixed_point.max_iterations", "200"},
      {"fixed_point.tolerance", "1e-3"},
      {"fixed_point.mode", "damped-picard"},
      {"fixed_point.check_hypotheses", "true"},
      {"certify.challengers", "100"},
      {"certify.tolerance", "auto"},
      {"certify.run", ""},
      {"particles.count", "100000"},
      {"particles.tolerance", "0.05"},
      {"output.dir", "run"},
      {"seed", "1"},
  };
  return d;
}

void Config::set(const std::string& key, const std::string& value, const std::string& where) {
  if (!config_defaults().count(key) && !passthrough(key)) throw ValidationError(where + ": unknown key '" + key + "'");
  if (key.rfind("lyapunov.", 0) == 0 && std::find(kLyapunovKeys.begin(), kLyapunovKeys.end(), key) == kLyapunovKeys.end()) {
    throw ValidationError(where + ": unknown key '" + key + "'");
  }
  values_[key] = value;
}

Config Config::parse(std::istream& is, const std::string& source) {
  Config c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ValidationError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (c.values_.count(key)) throw ValidationError(where + ": duplicate key '" + key + "'");
    c.set(key, trim(line.substr(eq + 1)), where);
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot read config file '" + path + "'");
  return parse(f, path);
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ValidationError("override '" + assignment + "' is not key=value");
  const std::string key = trim(assignment.substr(0, eq)), value = trim(assignment.substr(eq + 1));
  set(key, value, "override");
  overrides_.push_back(key + " = " + value);
}

std::string Config::str(const std::string& key) const {
  if (const auto it = values_.find(key); it != values_.end()) return it->second;
  if (const auto it = config_defaults().find(key); it != config_defaults().end()) return it->second;
  throw ValidationError("missing config key '" + key + "'");
}

double Config::num(const std::string& key) const {
  const std::string s = str(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "' needs a number, got '" + s + "'");
  }
}

std::size_t Config::count(const std::string& key) const {
  const double v = num(key);
  if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
    throw ValidationError("config key '" + key + "' needs a nonnegative integer");
  }
  return static_cast<std::size_t>(v);
}

bool Config::flag(const std::string& key) const {
  const std::string s = str(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ValidationError("config key '" + key + "' needs true or false, got '" + s + "'");
}

std::vector<double> Config::list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(str(key));
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stod(trim(cell)));
    } catch (const std::exception&) {
      throw ValidationError("config key '" + key + "' needs a comma-separated list of numbers");
    }
  }
  if (out.empty()) throw ValidationError("config key '" + key + "' is empty");
  return out;
}

std::string Config::snapshot() const {
  std::map<std::string, std::string> all(config_defaults());
  for (const auto& [k, v] : values_) all[k] = v;
  std::ostringstream os;
  for (const auto& o : overrides_) os << "# override: " << o << "\n";
  for (const auto& [k, v] : all) os << k << " = " << v << "\n";
  return os.str();
}

namespace {

std::vector<double> per_axis(const Config& cfg, const std::string& key, int dim) {
  auto v = cfg.list(key);
  if (v.size() == 1 && dim == 2) v.push_back(v[0]);
  if (static_cast<int>(v.size()) != dim) throw DimensionError("config key '" + key + "' needs " + std::to_string(dim) + " values");
  return v;
}

}  // namespace

Scenario build_scenario(const Config& cfg) {
  const int d = static_cast<int>(cfg.count("grid.dim"));
  const StateGrid grid(d, cfg.num("grid.L"), cfg.count("grid.n"));
  const TimeGrid times(cfg.num("time.T"), cfg.count("time.K"));

  const int d1 = static_cast<int>(cfg.count("controls.dim"));
  ControlSet controls = [&] {
    const std::string shape = cfg.str("controls.shape");
    if (shape == "box") {
      return ControlSet::box(per_axis(cfg, "controls.lo", d1), per_axis(cfg, "controls.hi", d1), cfg.count("controls.points"));
    }
    if (shape == "ball") return ControlSet::ball(d1, cfg.num("controls.radius"), cfg.count("controls.points"));
    throw ValidationError("controls.shape must be box or ball");
  }();
  if (cfg.str("controls.default") != "auto") controls.set_default_index(cfg.count("controls.default"));

  Params params;
  for (const auto& [k, v] : cfg.values()) {
    if (k.rfind("model.", 0) == 0 && k != "model.name") params[k.substr(6)] = v;
  }
  const std::string name = cfg.str("model.name");
  Params merged = catalog_defaults(name);
  for (const auto& [k, v] : params) merged[k] = v;
  CoefficientSet coeffs = example_catalog(name, merged, d, std::move(controls));
  LyapunovData& ly = coeffs.lyapunov();
  if (cfg.has("lyapunov.c_l")) ly.c_l = cfg.num("lyapunov.c_l");
  if (cfg.has("lyapunov.c_f")) ly.c_f = cfg.num("lyapunov.c_f");
  if (cfg.has("lyapunov.c_g")) ly.c_g = cfg.num("lyapunov.c_g");
  if (cfg.has("lyapunov.c_h")) ly.c_h = cfg.num("lyapunov.c_h");

  std::vector<double> nu;
  const std::string kind = cfg.str("initial.kind");
  if (kind == "gaussian" || kind == "point") {
    const auto m = per_axis(cfg, "initial.mean", d);
    SVec mean(d);
    for (int c = 0; c < d; ++c) mean(c) = m[static_cast<std::size_t>(c)];
    nu = kind == "gaussian" ? discrete_gaussian(grid, mean, cfg.num("initial.variance")) : point_mass(grid, mean);
  } else if (kind == "file") {
    std::ifstream f(cfg.str("initial.file"));
    if (!f) throw ValidationError("cannot read initial.file '" + cfg.str("initial.file") + "'");
    const MeasureCurve c = read_curve_csv(f);
    if (!(c.grid() == grid)) throw DimensionError("initial.file uses a different state grid");
    const auto w = c.at(0);
    nu.assign(w.begin(), w.end());
  } else {
    throw ValidationError("initial.kind must be gaussian, point or file");
  }

  Scenario s{grid, times, std::move(coeffs), std::move(nu), {}, {}, 100, -1.0, {}, 0.05, 1};
  s.fpk.scheme = parse_scheme(cfg.str("solver.scheme"));
  s.fpk.cfl_max = cfg.num("solver.cfl_max");
  s.fpk.renormalize = cfg.flag("solver.renormalize");
  s.fpk.stencil.allow_wide_stencil = cfg.flag("solver.wide_stencil");
  s.seed = cfg.count("seed");
  FixedPointConfig& fp = s.fixed_point;
  fp.damping = cfg.num("fixed_point.damping");
  fp.max_iterations = cfg.count("fixed_point.max_iterations");
  fp.tolerance = cfg.num("fixed_point.tolerance");
  fp.mode = parse_averaging(cfg.str("fixed_point.mode"));
  fp.check_hypotheses = cfg.flag("fixed_point.check_hypotheses");
  fp.seed = s.seed;
  fp.best_response.r = cfg.num("best_response.r");
  fp.best_response.enforce_apriori = cfg.flag("best_response.enforce_apriori");
  fp.best_response.cfl_max = s.fpk.cfl_max;
  fp.best_response.stencil = s.fpk.stencil;
  fp.validate();
  s.challengers = cfg.count("certify.challengers");
  s.certify_tolerance = cfg.str("certify.tolerance") == "auto" ? -1.0 : cfg.num("certify.tolerance");
  s.particles.count = cfg.count("particles.count");
  s.particles.seed = s.seed;
  s.particle_tolerance = cfg.num("particles.tolerance");
  return s;
}

}  // namespace mfg
