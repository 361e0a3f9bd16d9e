#pragma once

#include "mfg/best_response.hpp"
#include "mfg/equilibrium.hpp"
#include "mfg/particles.hpp"

#include <istream>
#include <map>
#include <string>
#include <vector>

namespace mfg {

// Flat "section.key = value" text with '#' comments. Keys are checked against the
// documented list (model.* and lyapunov.* pass through to the catalog and constants).
class Config {
 public:
  static Config parse(std::istream& is, const std::string& source = "<config>");
  static Config load(const std::string& path);

  // "key=value"; applied after parsing and logged in the snapshot.
  void apply_override(const std::string& assignment);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string str(const std::string& key) const;  // value or the documented default
  double num(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> list(const std::string& key) const;

  // Every documented key with its effective value, sorted, plus the override log.
  std::string snapshot() const;

  const std::map<std::string, std::string>& values() const { return values_; }
  const std::vector<std::string>& overrides() const { return overrides_; }

 private:
  void set(const std::string& key, const std::string& value, const std::string& where);

  std::map<std::string, std::string> values_;
  std::vector<std::string> overrides_;
};

// Documented keys and their defaults.
const std::map<std::string, std::string>& config_defaults();

struct Scenario {
  StateGrid grid;
  TimeGrid times;
  CoefficientSet coeffs;
  std::vector<double> nu;
  FpkOptions fpk;
  FixedPointConfig fixed_point;
  std::size_t challengers = 100;
  double certify_tolerance = -1.0;
  ParticleOptions particles;
  double particle_tolerance = 0.05;
  std::uint64_t seed = 1;
};

Scenario build_scenario(const Config& cfg);

}  // namespace mfg
